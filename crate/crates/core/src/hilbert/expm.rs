//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! The Padé degree is picked from {3, 5, 7, 9, 13} using the 1-norm
//! thresholds of Higham (2005); for larger norms the argument is scaled by
//! 2^-s so that the degree-13 approximant applies, and the result is squared
//! s times.

use num_complex::Complex64;

use super::linalg::{gemm, is_finite, one_norm, CMatrix};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub fn expm_matrix(a: &CMatrix) -> Result<CMatrix> {
    if !is_finite(a) {
        return Err(Error::NonFinite("expm input"));
    }
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Ok(a.clone());
    }

    let norm = one_norm(a);
    for (degree, theta) in THETA {
        if norm <= theta {
            let (u, v) = pade_low(a, degree);
            return solve_pade(&u, &v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * Complex64::new(2f64.powi(-s), 0.0);
    let (u, v) = pade13(&scaled);
    let mut x = solve_pade(&u, &v)?;
    for _ in 0..s {
        x = gemm(&x, &x);
    }
    if !is_finite(&x) {
        return Err(Error::NonFinite("expm result"));
    }
    Ok(x)
}

fn coeffs(degree: usize) -> &'static [f64] {
    match degree {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        _ => unreachable!("unsupported Padé degree {degree}"),
    }
}

fn pade_low(a: &CMatrix, degree: usize) -> (CMatrix, CMatrix) {
    let b = coeffs(degree);
    let n = a.nrows();
    let ident = CMatrix::identity(n, n);
    let a2 = gemm(a, a);
    // powers[k] = A^(2k)
    let mut powers = vec![ident.clone(), a2.clone()];
    while powers.len() <= degree / 2 {
        let next = gemm(powers.last().unwrap(), &a2);
        powers.push(next);
    }
    let mut odd = CMatrix::zeros(n, n);
    let mut even = CMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        let j_even = 2 * k;
        if j_even < b.len() {
            even += p * Complex64::new(b[j_even], 0.0);
        }
        let j_odd = 2 * k + 1;
        if j_odd < b.len() {
            odd += p * Complex64::new(b[j_odd], 0.0);
        }
    }
    (gemm(a, &odd), even)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let b = B13;
    let c = |x: f64| Complex64::new(x, 0.0);
    let n = a.nrows();
    let ident = CMatrix::identity(n, n);
    let a2 = gemm(a, a);
    let a4 = gemm(&a2, &a2);
    let a6 = gemm(&a4, &a2);

    let inner_u = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
    let u_poly =
        gemm(&a6, &inner_u) + &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + &ident * c(b[1]);
    let u = gemm(a, &u_poly);

    let inner_v = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
    let v = gemm(&a6, &inner_v) + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + &ident * c(b[0]);
    (u, v)
}

fn solve_pade(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .filter(is_finite)
        .ok_or(Error::NonFinite("Padé denominator"))
}
