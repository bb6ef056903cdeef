use super::{QrError, QrMatrix};
use crate::pngio;

pub const DEFAULT_QUIET_MODULES: usize = 4;

/// Black-on-white grayscale PNG with a light quiet zone around the symbol.
pub fn render_qr_png(matrix: &QrMatrix, module_px: usize, quiet_modules: usize) -> Result<Vec<u8>, QrError> {
    if module_px == 0 {
        return Err(QrError::ModuleSize);
    }
    let modules = matrix.side() + 2 * quiet_modules;
    let px = modules * module_px;
    let mut img = vec![255u8; px * px];
    for (y, row) in matrix.modules.iter().enumerate() {
        for (x, &dark) in row.iter().enumerate() {
            if !dark {
                continue;
            }
            let (x0, y0) = ((x + quiet_modules) * module_px, (y + quiet_modules) * module_px);
            for yy in y0..y0 + module_px {
                img[yy * px + x0..yy * px + x0 + module_px].fill(0);
            }
        }
    }
    Ok(pngio::encode_gray(px as u32, px as u32, &img))
}

/// Reads an axis-aligned QR image, such as one produced by
/// [`render_qr_png`], back into its payload. Module size is measured from the
/// top-left finder pattern and modules are sampled at their centres.
pub fn scan_qr_png(bytes: &[u8]) -> Result<String, QrError> {
    let bad = |m: &str| QrError::Structure(m.to_string());
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| bad(&e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| bad("image too large"))?];
    let info = reader.next_frame(&mut buf).map_err(|e| bad(&e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let dark = |x: usize, y: usize| -> bool {
        let o = (y * w + x) * channels;
        let lum = match channels {
            1 | 2 => buf[o] as u32,
            _ => (buf[o] as u32 * 299 + buf[o + 1] as u32 * 587 + buf[o + 2] as u32 * 114) / 1000,
        };
        let opaque = match channels {
            2 => buf[o + 1] >= 128,
            4 => buf[o + 3] >= 128,
            _ => true,
        };
        opaque && lum < 128
    };

    let (mut min_x, mut min_y, mut max_x, mut max_y) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if dark(x, y) {
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
            }
        }
    }
    if min_x == usize::MAX {
        return Err(bad("no dark pixels"));
    }
    let run = (min_x..w).take_while(|&x| dark(x, min_y)).count();
    if run < 7 || run % 7 != 0 {
        return Err(bad("finder pattern not found"));
    }
    let module = run / 7;
    let span = max_x - min_x + 1;
    if span % module != 0 || max_y - min_y + 1 != span {
        return Err(bad("symbol is not square on the module grid"));
    }
    let side = span / module;
    let modules = (0..side)
        .map(|my| {
            (0..side)
                .map(|mx| dark(min_x + mx * module + module / 2, min_y + my * module + module / 2))
                .collect()
        })
        .collect();
    super::decode_qr(&QrMatrix::from_modules(modules)?)
}
