use super::gf::rs_correct;
use super::layout::{
    count_bits, format_bits, format_positions_primary, format_positions_secondary, mask_bit,
    side, version_bits, Blocks, Canvas, MAX_VERSION, MIN_VERSION,
};
use super::{EccLevel, QrError, QrMatrix};

fn finder_ok(m: &[Vec<bool>], ox: usize, oy: usize) -> bool {
    (0..7).all(|dy| {
        (0..7).all(|dx| {
            let d = (dx as i32 - 3).abs().max((dy as i32 - 3).abs());
            m[oy + dy][ox + dx] == (d != 2)
        })
    })
}

fn read_bits(m: &[Vec<bool>], positions: &[(usize, usize)]) -> u32 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &(x, y))| acc | (m[y][x] as u32) << i)
}

/// Version, level and mask of a raw module grid.
pub(super) fn read_structure(m: &[Vec<bool>]) -> Result<(u8, EccLevel, u8), QrError> {
    let size = m.len();
    if m.iter().any(|row| row.len() != size) {
        return Err(QrError::Structure("matrix is not square".into()));
    }
    let version = (MIN_VERSION..=MAX_VERSION)
        .find(|&v| side(v) == size)
        .ok_or_else(|| QrError::Structure(format!("side {size} is not a supported version")))?;
    for (ox, oy) in [(0, 0), (size - 7, 0), (0, size - 7)] {
        if !finder_ok(m, ox, oy) {
            return Err(QrError::Structure(format!("finder pattern at ({ox}, {oy}) is damaged")));
        }
    }

    let copies = [
        read_bits(m, &format_positions_primary()),
        read_bits(m, &format_positions_secondary(size)),
    ];
    let (mut best, mut best_dist) = (None, u32::MAX);
    for ecc in EccLevel::ALL {
        for mask in 0..8u8 {
            let code = format_bits(ecc, mask) as u32;
            for c in copies {
                let d = (code ^ c).count_ones();
                if d < best_dist {
                    best_dist = d;
                    best = Some((ecc, mask));
                }
            }
        }
    }
    let (ecc, mask) = best.filter(|_| best_dist <= 3).ok_or_else(|| {
        QrError::Structure("format information unreadable".into())
    })?;

    if version >= 7 {
        let (mut a, mut b) = (0u32, 0u32);
        for i in 0..18 {
            let (p, q) = (size - 11 + i % 3, i / 3);
            a |= (m[q][p] as u32) << i;
            b |= (m[p][q] as u32) << i;
        }
        let read = (7..=40u8)
            .min_by_key(|&v| (version_bits(v) ^ a).count_ones().min((version_bits(v) ^ b).count_ones()))
            .expect("non-empty range");
        let dist = (version_bits(read) ^ a).count_ones().min((version_bits(read) ^ b).count_ones());
        if dist > 3 || read != version {
            return Err(QrError::Structure("version information disagrees with size".into()));
        }
    }
    Ok((version, ecc, mask))
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    fn read(&mut self, n: usize) -> Option<u32> {
        if n > self.remaining() {
            return None;
        }
        let mut v = 0u32;
        for _ in 0..n {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = v << 1 | bit as u32;
            self.pos += 1;
        }
        Some(v)
    }
}

/// Reads the payload back out of a symbol, correcting codeword errors.
pub fn decode_qr(matrix: &QrMatrix) -> Result<String, QrError> {
    let (version, ecc, mask) = read_structure(&matrix.modules)?;
    let canvas = Canvas::new(version);
    let blocks = Blocks::new(version, ecc);

    let positions = canvas.data_positions();
    let mut codewords = vec![0u8; blocks.total_codewords];
    for (k, &(x, y)) in positions.iter().take(blocks.total_codewords * 8).enumerate() {
        let bit = matrix.modules[y][x] ^ mask_bit(mask, x, y);
        codewords[k / 8] |= (bit as u8) << (7 - k % 8);
    }

    let mut per_block: Vec<Vec<u8>> = vec![Vec::new(); blocks.num_blocks];
    for (cw, owner) in codewords.iter().zip(blocks.interleaved_owner()) {
        per_block[owner].push(*cw);
    }
    let mut data = Vec::with_capacity(blocks.data_codewords());
    for (b, block) in per_block.iter_mut().enumerate() {
        rs_correct(block, blocks.ecc_per_block).ok_or(QrError::Uncorrectable(b))?;
        data.extend_from_slice(&block[..blocks.data_len(b)]);
    }

    let mut reader = BitReader { bytes: &data, pos: 0 };
    let mut payload = Vec::new();
    while reader.remaining() >= 4 {
        match reader.read(4) {
            Some(0) => break,
            Some(0b0100) => {
                let count = reader
                    .read(count_bits(version))
                    .ok_or_else(|| QrError::Payload("truncated count".into()))?;
                for _ in 0..count {
                    let b = reader
                        .read(8)
                        .ok_or_else(|| QrError::Payload("truncated byte segment".into()))?;
                    payload.push(b as u8);
                }
            }
            Some(mode) => return Err(QrError::Payload(format!("unsupported mode {mode:04b}"))),
            None => break,
        }
    }
    String::from_utf8(payload).map_err(|_| QrError::Payload("payload is not UTF-8".into()))
}

#[cfg(test)]
mod tests {
    use super::super::encode_qr;
    use super::*;

    #[test]
    fn roundtrip_every_level_and_version() {
        for ecc in EccLevel::ALL {
            for v in MIN_VERSION..=MAX_VERSION {
                let len = super::super::byte_capacity(v, ecc);
                let text: String = (0..len).map(|i| (b'!' + (i % 90) as u8) as char).collect();
                let m = encode_qr(&text, ecc).unwrap();
                assert_eq!(m.version, v);
                assert_eq!(decode_qr(&m).unwrap(), text, "v{v} {ecc:?}");
                let again = QrMatrix::from_modules(m.modules.clone()).unwrap();
                assert_eq!((again.version, again.ecc_level, again.mask_id), (m.version, m.ecc_level, m.mask_id));
            }
        }
    }

    #[test]
    fn damaged_finder_is_structural() {
        let mut m = encode_qr("https://example.org", EccLevel::M).unwrap();
        m.modules[3][3] = false;
        assert!(matches!(decode_qr(&m), Err(QrError::Structure(_))));
    }

    #[test]
    fn heavy_damage_is_reported() {
        let mut m = encode_qr("https://example.org/a/long/enough/path", EccLevel::L).unwrap();
        let positions = Canvas::new(m.version).data_positions();
        for &(x, y) in positions.iter().take(8 * 12) {
            m.modules[y][x] = !m.modules[y][x];
        }
        assert!(decode_qr(&m).is_err());
    }
}
