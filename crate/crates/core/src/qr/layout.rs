//! Symbol geometry shared by the encoder and decoder: function patterns,
//! format/version information, codeword placement and block structure.

use super::EccLevel;

pub const MIN_VERSION: u8 = 1;
pub const MAX_VERSION: u8 = 10;

// Indexed [ecc ordinal][version]; index 0 unused.
const ECC_CODEWORDS_PER_BLOCK: [[u8; 11]; 4] = [
    [0, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18],
    [0, 10, 16, 26, 18, 24, 16, 18, 22, 22, 26],
    [0, 13, 22, 18, 26, 18, 24, 18, 22, 20, 24],
    [0, 17, 28, 22, 16, 22, 28, 26, 26, 24, 28],
];

const NUM_BLOCKS: [[u8; 11]; 4] = [
    [0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4],
    [0, 1, 1, 1, 2, 2, 4, 4, 4, 5, 5],
    [0, 1, 1, 2, 2, 4, 4, 6, 6, 8, 8],
    [0, 1, 1, 2, 4, 4, 4, 5, 6, 8, 8],
];

const ALIGNMENT_CENTERS: [&[usize]; 11] = [
    &[],
    &[],
    &[6, 18],
    &[6, 22],
    &[6, 26],
    &[6, 30],
    &[6, 34],
    &[6, 22, 38],
    &[6, 24, 42],
    &[6, 26, 46],
    &[6, 28, 50],
];

pub fn side(version: u8) -> usize {
    17 + 4 * version as usize
}

fn raw_data_modules(version: u8) -> usize {
    let v = version as usize;
    let mut n = (16 * v + 128) * v + 64;
    if v >= 2 {
        let align = v / 7 + 2;
        n -= (25 * align - 10) * align - 55;
        if v >= 7 {
            n -= 36;
        }
    }
    n
}

/// Block structure of one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blocks {
    pub total_codewords: usize,
    pub ecc_per_block: usize,
    pub num_blocks: usize,
    /// Data codewords in each short block; the last `num_blocks - short`
    /// blocks carry one more.
    pub short_data_len: usize,
    pub num_short: usize,
}

impl Blocks {
    pub fn new(version: u8, ecc: EccLevel) -> Self {
        let total_codewords = raw_data_modules(version) / 8;
        let ecc_per_block = ECC_CODEWORDS_PER_BLOCK[ecc.ordinal()][version as usize] as usize;
        let num_blocks = NUM_BLOCKS[ecc.ordinal()][version as usize] as usize;
        let num_short = num_blocks - total_codewords % num_blocks;
        let short_data_len = total_codewords / num_blocks - ecc_per_block;
        Blocks { total_codewords, ecc_per_block, num_blocks, short_data_len, num_short }
    }

    pub fn data_codewords(&self) -> usize {
        self.total_codewords - self.ecc_per_block * self.num_blocks
    }

    pub fn data_len(&self, block: usize) -> usize {
        self.short_data_len + usize::from(block >= self.num_short)
    }

    /// For each codeword in transmission order, the block it belongs to.
    pub fn interleaved_owner(&self) -> Vec<usize> {
        let mut owner = Vec::with_capacity(self.total_codewords);
        for i in 0..=self.short_data_len {
            for b in 0..self.num_blocks {
                if i < self.data_len(b) {
                    owner.push(b);
                }
            }
        }
        for _ in 0..self.ecc_per_block {
            owner.extend(0..self.num_blocks);
        }
        owner
    }
}

/// Length of the byte-mode character count field.
pub fn count_bits(version: u8) -> usize {
    if version <= 9 {
        8
    } else {
        16
    }
}

/// Longest byte-mode payload that fits the given version and level.
pub fn byte_capacity(version: u8, ecc: EccLevel) -> usize {
    (Blocks::new(version, ecc).data_codewords() * 8 - 4 - count_bits(version)) / 8
}

/// Module grid with a parallel record of which modules belong to function
/// patterns. Indexed `[y][x]`.
pub struct Canvas {
    pub size: usize,
    pub dark: Vec<Vec<bool>>,
    pub function: Vec<Vec<bool>>,
}

impl Canvas {
    pub fn new(version: u8) -> Self {
        let size = side(version);
        let mut c = Canvas {
            size,
            dark: vec![vec![false; size]; size],
            function: vec![vec![false; size]; size],
        };
        c.draw_function_patterns(version);
        c
    }

    fn set_function(&mut self, x: usize, y: usize, dark: bool) {
        self.dark[y][x] = dark;
        self.function[y][x] = true;
    }

    fn draw_function_patterns(&mut self, version: u8) {
        let size = self.size;
        for i in 0..size {
            self.set_function(6, i, i % 2 == 0);
            self.set_function(i, 6, i % 2 == 0);
        }
        self.draw_finder(3, 3);
        self.draw_finder(size - 4, 3);
        self.draw_finder(3, size - 4);

        let centers = ALIGNMENT_CENTERS[version as usize];
        let last = centers.len().saturating_sub(1);
        for (i, &cx) in centers.iter().enumerate() {
            for (j, &cy) in centers.iter().enumerate() {
                let on_finder = (i == 0 && j == 0) || (i == 0 && j == last) || (i == last && j == 0);
                if !on_finder {
                    self.draw_alignment(cx, cy);
                }
            }
        }
        // Reserve format areas; real bits are written per mask.
        self.draw_format_bits(0);
        self.draw_version(version);
    }

    fn draw_finder(&mut self, cx: usize, cy: usize) {
        for dy in -4i32..=4 {
            for dx in -4i32..=4 {
                let (x, y) = (cx as i32 + dx, cy as i32 + dy);
                if x < 0 || y < 0 || x >= self.size as i32 || y >= self.size as i32 {
                    continue;
                }
                let d = dx.abs().max(dy.abs());
                self.set_function(x as usize, y as usize, d != 2 && d != 4);
            }
        }
    }

    fn draw_alignment(&mut self, cx: usize, cy: usize) {
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                let d = dx.abs().max(dy.abs());
                self.set_function((cx as i32 + dx) as usize, (cy as i32 + dy) as usize, d != 1);
            }
        }
    }

    pub fn draw_format_bits(&mut self, bits: u16) {
        let size = self.size;
        let bit = |i: usize| (bits >> i) & 1 != 0;
        for (i, (x, y)) in format_positions_primary().into_iter().enumerate() {
            self.set_function(x, y, bit(i));
        }
        for (i, (x, y)) in format_positions_secondary(size).into_iter().enumerate() {
            self.set_function(x, y, bit(i));
        }
        self.set_function(8, size - 8, true);
    }

    fn draw_version(&mut self, version: u8) {
        if version < 7 {
            return;
        }
        let bits = version_bits(version);
        for i in 0..18 {
            let dark = (bits >> i) & 1 != 0;
            let a = self.size - 11 + i % 3;
            let b = i / 3;
            self.set_function(a, b, dark);
            self.set_function(b, a, dark);
        }
    }

    /// Data module coordinates `(x, y)` in placement order.
    pub fn data_positions(&self) -> Vec<(usize, usize)> {
        let size = self.size;
        let mut out = Vec::new();
        let mut right = size as i32 - 1;
        while right >= 1 {
            if right == 6 {
                right = 5;
            }
            for vert in 0..size {
                for j in 0..2 {
                    let x = (right - j) as usize;
                    let upward = (right + 1) & 2 == 0;
                    let y = if upward { size - 1 - vert } else { vert };
                    if !self.function[y][x] {
                        out.push((x, y));
                    }
                }
            }
            right -= 2;
        }
        out
    }
}

/// Bit positions 0..15 of the copy around the top-left finder.
pub fn format_positions_primary() -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(15);
    for i in 0..=5 {
        v.push((8, i));
    }
    v.push((8, 7));
    v.push((8, 8));
    v.push((7, 8));
    for i in 9..15 {
        v.push((14 - i, 8));
    }
    v
}

/// Bit positions 0..15 of the split copy along the other two finders.
pub fn format_positions_secondary(size: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(15);
    for i in 0..8 {
        v.push((size - 1 - i, 8));
    }
    for i in 8..15 {
        v.push((8, size - 15 + i));
    }
    v
}

pub fn format_bits(ecc: EccLevel, mask: u8) -> u16 {
    let data = (ecc.format_bits() << 3 | mask as u16) as u32;
    let mut rem = data;
    for _ in 0..10 {
        rem = (rem << 1) ^ ((rem >> 9) * 0x537);
    }
    (((data << 10) | (rem & 0x3ff)) ^ 0x5412) as u16
}

pub fn version_bits(version: u8) -> u32 {
    let mut rem = version as u32;
    for _ in 0..12 {
        rem = (rem << 1) ^ ((rem >> 11) * 0x1f25);
    }
    (version as u32) << 12 | (rem & 0xfff)
}

pub fn mask_bit(mask: u8, x: usize, y: usize) -> bool {
    match mask {
        0 => (x + y).is_multiple_of(2),
        1 => y.is_multiple_of(2),
        2 => x.is_multiple_of(3),
        3 => (x + y).is_multiple_of(3),
        4 => (x / 3 + y / 2).is_multiple_of(2),
        5 => x * y % 2 + x * y % 3 == 0,
        6 => (x * y % 2 + x * y % 3).is_multiple_of(2),
        7 => ((x + y) % 2 + x * y % 3).is_multiple_of(2),
        _ => unreachable!("mask id out of range"),
    }
}
