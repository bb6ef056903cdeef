//! GF(256) arithmetic over the QR field polynomial x^8+x^4+x^3+x^2+1 and
//! Reed-Solomon coding with generator roots alpha^0 .. alpha^(n-1).

const PRIMITIVE: u16 = 0x11d;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

const fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= PRIMITIVE;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build_tables();

pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
    }
}

pub fn div(a: u8, b: u8) -> u8 {
    assert!(b != 0, "division by zero in GF(256)");
    if a == 0 {
        0
    } else {
        TABLES.exp[TABLES.log[a as usize] as usize + 255 - TABLES.log[b as usize] as usize]
    }
}

pub fn pow_alpha(e: usize) -> u8 {
    TABLES.exp[e % 255]
}

pub fn inv(a: u8) -> u8 {
    div(1, a)
}

/// Generator polynomial coefficients, highest degree first, leading 1
/// omitted.
fn generator(degree: usize) -> Vec<u8> {
    let mut g = vec![0u8; degree];
    g[degree - 1] = 1;
    let mut root = 1u8;
    for _ in 0..degree {
        for j in 0..degree {
            g[j] = mul(g[j], root);
            if j + 1 < degree {
                g[j] ^= g[j + 1];
            }
        }
        root = mul(root, 2);
    }
    g
}

/// Error-correction codewords for `data`.
pub fn rs_encode(data: &[u8], ecc_len: usize) -> Vec<u8> {
    let g = generator(ecc_len);
    let mut rem = vec![0u8; ecc_len];
    for &b in data {
        let factor = b ^ rem[0];
        rem.remove(0);
        rem.push(0);
        for (r, &c) in rem.iter_mut().zip(&g) {
            *r ^= mul(c, factor);
        }
    }
    rem
}

/// Evaluates a polynomial stored highest-degree first.
fn eval_high_first(poly: &[u8], x: u8) -> u8 {
    poly.iter().fold(0, |acc, &c| mul(acc, x) ^ c)
}

/// Evaluates a polynomial stored lowest-degree first.
fn eval_low_first(poly: &[u8], x: u8) -> u8 {
    poly.iter().rev().fold(0, |acc, &c| mul(acc, x) ^ c)
}

/// Corrects up to `ecc_len / 2` byte errors in place. Returns the number of
/// corrected bytes, or `None` when the block is beyond repair.
pub fn rs_correct(block: &mut [u8], ecc_len: usize) -> Option<usize> {
    let n = block.len();
    let syndromes: Vec<u8> = (0..ecc_len).map(|j| eval_high_first(block, pow_alpha(j))).collect();
    if syndromes.iter().all(|&s| s == 0) {
        return Some(0);
    }

    // Berlekamp-Massey; polynomials lowest degree first.
    let mut locator = vec![1u8];
    let mut prev = vec![1u8];
    let mut errors = 0usize;
    let mut shift = 1usize;
    let mut prev_disc = 1u8;
    for step in 0..ecc_len {
        let mut disc = syndromes[step];
        for i in 1..=errors.min(locator.len() - 1) {
            disc ^= mul(locator[i], syndromes[step - i]);
        }
        if disc == 0 {
            shift += 1;
            continue;
        }
        let coef = div(disc, prev_disc);
        let mut updated = locator.clone();
        if updated.len() < prev.len() + shift {
            updated.resize(prev.len() + shift, 0);
        }
        for (i, &p) in prev.iter().enumerate() {
            updated[i + shift] ^= mul(coef, p);
        }
        if 2 * errors <= step {
            prev = std::mem::replace(&mut locator, updated);
            errors = step + 1 - errors;
            prev_disc = disc;
            shift = 1;
        } else {
            locator = updated;
            shift += 1;
        }
    }
    while locator.len() > 1 && *locator.last().unwrap() == 0 {
        locator.pop();
    }
    if errors * 2 > ecc_len || locator.len() - 1 != errors {
        return None;
    }

    // Chien search: byte i carries the coefficient of x^(n-1-i).
    let positions: Vec<usize> = (0..n)
        .filter(|&i| eval_low_first(&locator, inv(pow_alpha(n - 1 - i))) == 0)
        .collect();
    if positions.len() != errors {
        return None;
    }

    // Forney: evaluator = S(x) * locator(x) mod x^ecc_len.
    let mut evaluator = vec![0u8; ecc_len];
    for (i, &s) in syndromes.iter().enumerate() {
        for (j, &l) in locator.iter().enumerate() {
            if i + j < ecc_len {
                evaluator[i + j] ^= mul(s, l);
            }
        }
    }
    let derivative: Vec<u8> = locator
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
        .collect();
    for &pos in &positions {
        let x = pow_alpha(n - 1 - pos);
        let x_inv = inv(x);
        let denom = eval_low_first(&derivative, x_inv);
        if denom == 0 {
            return None;
        }
        block[pos] ^= mul(x, div(eval_low_first(&evaluator, x_inv), denom));
    }

    if (0..ecc_len).any(|j| eval_high_first(block, pow_alpha(j)) != 0) {
        return None;
    }
    Some(errors)
}
