//! 3×5 bitmap digits for tick labels.

pub const GLYPH_W: usize = 3;
pub const GLYPH_H: usize = 5;
/// Horizontal advance per digit (glyph plus one blank column).
pub const ADVANCE: usize = GLYPH_W + 1;

/// Rows top to bottom; bit 2 is the leftmost column.
pub const DIGITS: [[u8; GLYPH_H]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// Pixel width of `n` written in decimal.
pub fn text_width(n: u32) -> usize {
    let digits = n.to_string().len();
    digits * ADVANCE - 1
}

/// Draws `n` with its top-left corner at `(x0, y0)`; pixels falling outside
/// the `width × height` buffer are dropped.
pub fn draw_number(pixels: &mut [f64], width: usize, height: usize, x0: usize, y0: usize, n: u32) {
    for (i, ch) in n.to_string().bytes().enumerate() {
        let glyph = &DIGITS[(ch - b'0') as usize];
        let gx = x0 + i * ADVANCE;
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..GLYPH_W {
                if bits & (0b100 >> col) != 0 {
                    let (x, y) = (gx + col, y0 + row);
                    if x < width && y < height {
                        pixels[y * width + x] = 1.0;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyphs_distinct() {
        for a in 0..10 {
            for b in (a + 1)..10 {
                assert_ne!(DIGITS[a], DIGITS[b], "{a} vs {b}");
            }
        }
    }

    #[test]
    fn widths() {
        assert_eq!(text_width(0), 3);
        assert_eq!(text_width(50), 7);
        assert_eq!(text_width(100), 11);
    }
}
