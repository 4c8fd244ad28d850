//! Deterministic rasterization of a [`ChartSpec`] onto a square grid.
//!
//! Ink is 1 on a 0 background. Series are told apart by intensity. Tick
//! labels use the 3×5 digit font; bar and line categories are marked with
//! short ticks under the x axis rather than text.

use super::font::{self, GLYPH_H};
use super::{ChartError, ChartKind, ChartSpec};

pub const DEFAULT_RESOLUTION: usize = 64;
pub const MIN_RESOLUTION: usize = 48;

/// Values carrying a y-axis tick label.
pub const Y_TICKS: [u32; 3] = [0, 50, 100];
/// Values carrying an x-axis tick label on scatter plots.
pub const X_TICKS: [u32; 3] = [0, 50, 100];

/// A rendered chart: row-major intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedChart {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
    pub source_seed: u64,
}

impl RenderedChart {
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
            source_seed: 0,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    fn set(&mut self, x: usize, y: usize, v: f64) {
        if x < self.width && y < self.height {
            self.pixels[y * self.width + x] = v;
        }
    }
}

/// Fixed-margin geometry for a given resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub resolution: usize,
    pub y_axis_col: usize,
    pub plot_left: usize,
    pub plot_right: usize,
    pub plot_top: usize,
    /// Row of the x axis; bars stand on the row above it.
    pub baseline: usize,
}

impl Layout {
    pub fn new(resolution: usize) -> Result<Self, ChartError> {
        if resolution < MIN_RESOLUTION {
            return Err(ChartError::Sizing {
                resolution,
                min: MIN_RESOLUTION,
            });
        }
        Ok(Self {
            resolution,
            y_axis_col: 13,
            plot_left: 14,
            plot_right: resolution - 3,
            plot_top: 4,
            baseline: resolution - 8,
        })
    }

    pub fn plot_width(&self) -> usize {
        self.plot_right - self.plot_left + 1
    }

    pub fn plot_height(&self) -> usize {
        self.baseline - self.plot_top
    }

    /// Bar height in pixels: `round(v · plot_height / 100)`.
    pub fn bar_height(&self, v: u32) -> usize {
        ((v as f64) * self.plot_height() as f64 / 100.0).round() as usize
    }

    pub fn value_row(&self, v: u32) -> usize {
        self.baseline - self.bar_height(v)
    }

    /// Column span `[start, end)` of category slot `i` out of `k`.
    pub fn slot(&self, i: usize, k: usize) -> (usize, usize) {
        let w = self.plot_width();
        (self.plot_left + i * w / k, self.plot_left + (i + 1) * w / k)
    }

    pub fn slot_center(&self, i: usize, k: usize) -> usize {
        let (s, e) = self.slot(i, k);
        s + (e - s - 1) / 2
    }

    pub fn scatter_col(&self, x: u32) -> usize {
        self.plot_left + ((x as f64) * (self.plot_width() - 1) as f64 / 100.0).round() as usize
    }

    pub fn scatter_row(&self, y: u32) -> usize {
        self.baseline - 1 - ((y as f64) * (self.plot_height() - 1) as f64 / 100.0).round() as usize
    }

    /// Top-left corner of the y tick label for `v`.
    pub fn y_label_origin(&self, v: u32) -> (usize, usize) {
        let right_edge = self.y_axis_col - 2; // last label column, then a gap and the tick
        let x0 = right_edge + 1 - font::text_width(v);
        (x0, self.value_row(v) - GLYPH_H / 2)
    }

    /// Top-left corner of the scatter x tick label for `v`.
    pub fn x_label_origin(&self, v: u32) -> (usize, usize) {
        let y0 = self.baseline + 2;
        let w = font::text_width(v);
        let x0 = if v == 0 {
            self.plot_left
        } else if v == 100 {
            self.resolution - w
        } else {
            self.scatter_col(v) - w / 2
        };
        (x0, y0)
    }
}

pub fn series_intensity(s: usize) -> f64 {
    1.0 - 0.08 * s as f64
}

pub fn slice_intensity(k: usize) -> f64 {
    1.0 - 0.09 * k as f64
}

/// Renders `spec` at `resolution × resolution`.
pub fn render_chart(spec: &ChartSpec, resolution: usize) -> Result<RenderedChart, ChartError> {
    let layout = Layout::new(resolution)?;
    let mut img = RenderedChart::blank(resolution, resolution);
    img.source_seed = spec.seed;
    match spec.kind {
        ChartKind::Pie => draw_pie(&mut img, &layout, &spec.series[0].y),
        ChartKind::Bar => {
            draw_axes(&mut img, &layout);
            draw_category_markers(&mut img, &layout, spec.x_labels.len());
            draw_bars(&mut img, &layout, spec);
        }
        ChartKind::Line => {
            draw_axes(&mut img, &layout);
            draw_category_markers(&mut img, &layout, spec.x_labels.len());
            draw_lines(&mut img, &layout, spec);
        }
        ChartKind::Scatter => {
            draw_axes(&mut img, &layout);
            draw_x_ticks(&mut img, &layout);
            draw_scatter(&mut img, &layout, spec);
        }
    }
    Ok(img)
}

fn draw_axes(img: &mut RenderedChart, l: &Layout) {
    for y in l.plot_top..=l.baseline {
        img.set(l.y_axis_col, y, 1.0);
    }
    for x in l.y_axis_col..=l.plot_right {
        img.set(x, l.baseline, 1.0);
    }
    let (w, h) = (img.width, img.height);
    for v in Y_TICKS {
        img.set(l.y_axis_col - 1, l.value_row(v), 1.0);
        let (x0, y0) = l.y_label_origin(v);
        font::draw_number(&mut img.pixels, w, h, x0, y0, v);
    }
}

fn draw_x_ticks(img: &mut RenderedChart, l: &Layout) {
    let (w, h) = (img.width, img.height);
    for v in X_TICKS {
        img.set(l.scatter_col(v), l.baseline + 1, 1.0);
        let (x0, y0) = l.x_label_origin(v);
        font::draw_number(&mut img.pixels, w, h, x0, y0, v);
    }
}

fn draw_category_markers(img: &mut RenderedChart, l: &Layout, k: usize) {
    for i in 0..k {
        let c = l.slot_center(i, k);
        img.set(c, l.baseline + 1, 1.0);
        img.set(c, l.baseline + 2, 1.0);
    }
}

fn draw_bars(img: &mut RenderedChart, l: &Layout, spec: &ChartSpec) {
    let k = spec.x_labels.len();
    let ns = spec.series.len();
    for i in 0..k {
        let (start, end) = l.slot(i, k);
        let usable = (end - start).saturating_sub(1).max(1);
        let bw = (usable / ns).max(1);
        for (s, series) in spec.series.iter().enumerate() {
            let x0 = start + s * usable / ns;
            let h = l.bar_height(series.y[i]);
            let ink = series_intensity(s);
            for x in x0..(x0 + bw).min(end) {
                for y in (l.baseline - h)..l.baseline {
                    img.set(x, y, ink);
                }
            }
        }
    }
}

fn draw_segment(img: &mut RenderedChart, (x0, y0): (usize, usize), (x1, y1): (usize, usize), ink: f64) {
    let (mut x, mut y) = (x0 as i64, y0 as i64);
    let (x1, y1) = (x1 as i64, y1 as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.set(x as usize, y as usize, ink);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_lines(img: &mut RenderedChart, l: &Layout, spec: &ChartSpec) {
    let k = spec.x_labels.len();
    for (s, series) in spec.series.iter().enumerate() {
        let pts: Vec<(usize, usize)> = series
            .y
            .iter()
            .enumerate()
            .map(|(i, &v)| (l.slot_center(i, k), l.value_row(v)))
            .collect();
        for w in pts.windows(2) {
            draw_segment(img, w[0], w[1], series_intensity(s));
        }
    }
}

fn draw_scatter(img: &mut RenderedChart, l: &Layout, spec: &ChartSpec) {
    for (s, series) in spec.series.iter().enumerate() {
        let ink = series_intensity(s);
        for (&x, &y) in series.x.iter().zip(&series.y) {
            let (cx, cy) = (l.scatter_col(x), l.scatter_row(y));
            for yy in cy.saturating_sub(1)..=cy + 1 {
                for xx in cx.saturating_sub(1)..=cx + 1 {
                    if (l.plot_left..=l.plot_right).contains(&xx) && (l.plot_top..l.baseline).contains(&yy) {
                        img.set(xx, yy, ink);
                    }
                }
            }
        }
    }
}

fn draw_pie(img: &mut RenderedChart, l: &Layout, values: &[u32]) {
    let total: u32 = values.iter().sum();
    let mut bounds = Vec::with_capacity(values.len());
    let mut acc = 0u32;
    for v in values {
        acc += v;
        bounds.push(acc as f64 / total as f64);
    }
    let cx = l.plot_left as f64 + (l.plot_width() - 1) as f64 / 2.0;
    let cy = l.plot_top as f64 + (l.plot_height() - 1) as f64 / 2.0;
    let r = (l.plot_width().min(l.plot_height()) / 2 - 1) as f64;
    for y in l.plot_top..l.baseline {
        for x in l.plot_left..=l.plot_right {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy > r * r {
                continue;
            }
            // Clockwise from twelve o'clock in image coordinates.
            let mut angle = dx.atan2(-dy);
            if angle < 0.0 {
                angle += std::f64::consts::TAU;
            }
            let frac = angle / std::f64::consts::TAU;
            let k = bounds.iter().position(|&b| frac < b).unwrap_or(values.len() - 1);
            img.set(x, y, slice_intensity(k));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartgen::NamedSeries;

    fn bar(values: &[u32]) -> ChartSpec {
        ChartSpec {
            kind: ChartKind::Bar,
            series: vec![NamedSeries {
                name: "sales".into(),
                x: vec![],
                y: values.to_vec(),
            }],
            x_labels: (0..values.len()).map(|i| format!("c{i}")).collect(),
            seed: 5,
        }
    }

    /// Ink pixels strictly above the x axis in column `x`.
    fn column_ink(img: &RenderedChart, l: &Layout, x: usize) -> usize {
        (0..l.baseline).filter(|&y| img.get(x, y) > 0.0).count()
    }

    #[test]
    fn pure_function() {
        let s = bar(&[10, 70, 30]);
        assert_eq!(render_chart(&s, 64).unwrap(), render_chart(&s, 64).unwrap());
    }

    #[test]
    fn too_small() {
        assert!(matches!(render_chart(&bar(&[1, 2]), 40), Err(ChartError::Sizing { .. })));
    }

    #[test]
    fn equal_bars_equal_heights() {
        let img = render_chart(&bar(&[5, 5, 5]), 64).unwrap();
        let l = Layout::new(64).unwrap();
        let hs: Vec<usize> = (0..3).map(|i| column_ink(&img, &l, l.slot(i, 3).0 + 1)).collect();
        assert!(hs.iter().all(|&h| h == hs[0] && h > 0), "{hs:?}");
    }

    #[test]
    fn bar_ratio() {
        for res in [48, 64, 96] {
            let img = render_chart(&bar(&[2, 1]), res).unwrap();
            let l = Layout::new(res).unwrap();
            let h0 = column_ink(&img, &l, l.slot(0, 2).0 + 1) as f64;
            let h1 = column_ink(&img, &l, l.slot(1, 2).0 + 1) as f64;
            assert!((h0 - 2.0 * h1).abs() <= 1.0, "{h0} {h1}");
        }
    }

    #[test]
    fn pixels_in_unit_interval() {
        let img = render_chart(&bar(&[100, 0, 37]), 64).unwrap();
        assert!(img.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(img.pixels.len(), 64 * 64);
    }
}
