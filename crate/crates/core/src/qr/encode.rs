use super::gf::rs_encode;
use super::layout::{byte_capacity, count_bits, format_bits, mask_bit, Blocks, Canvas, MAX_VERSION, MIN_VERSION};
use super::{EccLevel, QrError, QrMatrix};

struct BitBuffer(Vec<bool>);

impl BitBuffer {
    fn push(&mut self, value: u32, len: usize) {
        for i in (0..len).rev() {
            self.0.push((value >> i) & 1 != 0);
        }
    }
}

fn data_codewords(payload: &[u8], version: u8, blocks: &Blocks) -> Vec<u8> {
    let capacity_bits = blocks.data_codewords() * 8;
    let mut bits = BitBuffer(Vec::with_capacity(capacity_bits));
    bits.push(0b0100, 4);
    bits.push(payload.len() as u32, count_bits(version));
    for &b in payload {
        bits.push(b as u32, 8);
    }
    let terminator = (capacity_bits - bits.0.len()).min(4);
    bits.push(0, terminator);
    let pad = (8 - bits.0.len() % 8) % 8;
    bits.push(0, pad);

    let mut out: Vec<u8> = bits
        .0
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8))
        .collect();
    for filler in [0xecu8, 0x11].iter().cycle() {
        if out.len() >= blocks.data_codewords() {
            break;
        }
        out.push(*filler);
    }
    out
}

fn interleave(data: &[u8], blocks: &Blocks) -> Vec<u8> {
    let mut split = Vec::with_capacity(blocks.num_blocks);
    let mut k = 0;
    for b in 0..blocks.num_blocks {
        let len = blocks.data_len(b);
        let d = &data[k..k + len];
        split.push((d.to_vec(), rs_encode(d, blocks.ecc_per_block)));
        k += len;
    }
    let mut out = Vec::with_capacity(blocks.total_codewords);
    for i in 0..=blocks.short_data_len {
        for (d, _) in &split {
            if i < d.len() {
                out.push(d[i]);
            }
        }
    }
    for i in 0..blocks.ecc_per_block {
        for (_, e) in &split {
            out.push(e[i]);
        }
    }
    out
}

fn penalty(m: &[Vec<bool>]) -> u32 {
    let size = m.len();
    let mut score = 0u32;
    let line = |i: usize, j: usize, horizontal: bool| if horizontal { m[i][j] } else { m[j][i] };

    for horizontal in [true, false] {
        for i in 0..size {
            // Runs of five or more.
            let mut run = 1;
            for j in 1..size {
                if line(i, j, horizontal) == line(i, j - 1, horizontal) {
                    run += 1;
                } else {
                    if run >= 5 {
                        score += 3 + (run - 5);
                    }
                    run = 1;
                }
            }
            if run >= 5 {
                score += 3 + (run - 5);
            }
            // Finder-like 1:1:3:1:1 with four light modules on one side;
            // modules outside the symbol count as light.
            let at = |j: i32| -> bool {
                j >= 0 && (j as usize) < size && line(i, j as usize, horizontal)
            };
            const CORE: [bool; 7] = [true, false, true, true, true, false, true];
            for start in -4i32..size as i32 {
                if !(0..7).all(|k| at(start + k) == CORE[k as usize]) {
                    continue;
                }
                let light_before = (1..=4).all(|k| !at(start - k));
                let light_after = (7..11).all(|k| !at(start + k));
                score += 40 * (light_before as u32 + light_after as u32);
            }
        }
    }
    for y in 0..size - 1 {
        for x in 0..size - 1 {
            let c = m[y][x];
            if m[y][x + 1] == c && m[y + 1][x] == c && m[y + 1][x + 1] == c {
                score += 3;
            }
        }
    }
    let dark = m.iter().flatten().filter(|&&d| d).count() as i64;
    let total = (size * size) as i64;
    score += 10 * ((dark * 20 - total * 10).abs() / total) as u32;
    score
}

/// Encodes an ASCII string as a byte-mode symbol of the smallest version
/// that fits, choosing the mask with the lowest penalty score.
pub fn encode_qr(text: &str, ecc: EccLevel) -> Result<QrMatrix, QrError> {
    if text.is_empty() {
        return Err(QrError::Empty);
    }
    if !text.is_ascii() {
        return Err(QrError::NotAscii);
    }
    let payload = text.as_bytes();
    let version = (MIN_VERSION..=MAX_VERSION)
        .find(|&v| byte_capacity(v, ecc) >= payload.len())
        .ok_or(QrError::TooLong {
            len: payload.len(),
            max: byte_capacity(MAX_VERSION, ecc),
            ecc,
        })?;

    let blocks = Blocks::new(version, ecc);
    let codewords = interleave(&data_codewords(payload, version, &blocks), &blocks);
    let mut canvas = Canvas::new(version);
    let positions = canvas.data_positions();
    for (k, &(x, y)) in positions.iter().enumerate() {
        let byte = k / 8;
        canvas.dark[y][x] = byte < codewords.len() && (codewords[byte] >> (7 - k % 8)) & 1 != 0;
    }

    let mut best: Option<(u32, u8, Vec<Vec<bool>>)> = None;
    for mask in 0..8u8 {
        canvas.draw_format_bits(format_bits(ecc, mask));
        let mut m = canvas.dark.clone();
        for &(x, y) in &positions {
            m[y][x] ^= mask_bit(mask, x, y);
        }
        let p = penalty(&m);
        if best.as_ref().is_none_or(|(bp, _, _)| p < *bp) {
            best = Some((p, mask, m));
        }
    }
    let (_, mask_id, modules) = best.expect("eight masks evaluated");
    Ok(QrMatrix { version, ecc_level: ecc, mask_id, modules })
}
