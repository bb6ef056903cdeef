//! Thin PNG encoding helpers over the `png` crate.

use png::{BitDepth, ColorType, Encoder};

fn encode(width: u32, height: u32, color: ColorType, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(BitDepth::Eight);
        let mut writer = enc.write_header().expect("png header to memory");
        writer.write_image_data(data).expect("png data to memory");
    }
    out
}

pub fn encode_rgba(width: u32, height: u32, rgba: &[u8]) -> Vec<u8> {
    assert_eq!(rgba.len(), width as usize * height as usize * 4);
    encode(width, height, ColorType::Rgba, rgba)
}

pub fn encode_gray(width: u32, height: u32, gray: &[u8]) -> Vec<u8> {
    assert_eq!(gray.len(), width as usize * height as usize);
    encode(width, height, ColorType::Grayscale, gray)
}
