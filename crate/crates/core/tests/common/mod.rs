//! Brute-force reference implementations shared by the integration tests.
//! Nothing here goes through the dynamic programs under test.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Admissibility rule written out independently of the library.
#[derive(Debug, Clone)]
pub enum Rule {
    All,
    Through(Vec<(usize, usize)>),
    Avoid(BTreeSet<(usize, usize)>),
}

/// Cells removed by a centred square hole of side `floor(beta N)`.
pub fn hole_cells(n: usize, side: usize) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for i in 1..=n {
        for j in 1..=n {
            let di = (2 * i as i64 - n as i64).abs();
            let dj = (2 * j as i64 - n as i64).abs();
            if di.max(dj) < side as i64 {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Every admissible path as its list of cells, lexicographic in `R < U`.
pub fn all_paths(m: usize, n: usize, rule: &Rule) -> Vec<Vec<(usize, usize)>> {
    fn go(
        m: usize,
        n: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let (i, j) = *cur.last().unwrap();
        if (i, j) == (m, n) {
            out.push(cur.clone());
            return;
        }
        if i < m {
            cur.push((i + 1, j));
            go(m, n, cur, out);
            cur.pop();
        }
        if j < n {
            cur.push((i, j + 1));
            go(m, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(m, n, &mut vec![(1, 1)], &mut out);
    out.retain(|p| match rule {
        Rule::All => true,
        Rule::Through(w) => w.iter().all(|c| p.contains(c)),
        Rule::Avoid(mask) => p.iter().all(|c| !mask.contains(c)),
    });
    out
}

pub fn steps_of(path: &[(usize, usize)]) -> String {
    path.windows(2)
        .map(|w| if w[1].0 > w[0].0 { 'R' } else { 'U' })
        .collect()
}

/// Exact visit frequencies `count(cell) / Z`, keyed by cell.
pub fn visit_frequencies(
    m: usize,
    n: usize,
    paths: &[Vec<(usize, usize)>],
) -> Vec<Vec<BigRational>> {
    let z = BigInt::from(paths.len());
    let mut counts = vec![vec![0u64; n + 1]; m + 1];
    for p in paths {
        for &(i, j) in p {
            counts[i][j] += 1;
        }
    }
    counts
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| BigRational::new(BigInt::from(c), z.clone()))
                .collect()
        })
        .collect()
}

pub fn choose(n: i64, k: i64) -> BigUint {
    if k < 0 || n < 0 || k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for t in 0..k {
        acc = acc * BigUint::from((n - t) as u64) / BigUint::from((t + 1) as u64);
    }
    acc
}

/// `C(k-2, i-1) C(M+N-k, M-i) / C(M+N-2, M-1)`.
pub fn hypergeometric(i: usize, k: usize, m: usize, n: usize) -> BigRational {
    let (i, k, m, n) = (i as i64, k as i64, m as i64, n as i64);
    let num = choose(k - 2, i - 1) * choose(m + n - k, m - i);
    BigRational::new(num.into(), choose(m + n - 2, m - 1).into())
}

pub fn rational(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature over 64 equal panels, so that a narrow
/// bump inside a long flat interval is not missed.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|t| {
            let (lo, hi) = (a + t as f64 * h, a + (t + 1) as f64 * h);
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// `int |F - Phi|` for ascending atoms, by quadrature between atoms.
pub fn w1_by_quadrature(atoms: &[(f64, f64)]) -> f64 {
    let lo = atoms[0].0.min(-12.0) - 1.0;
    let hi = atoms[atoms.len() - 1].0.max(12.0) + 1.0;
    let mut knots = vec![lo];
    knots.extend(atoms.iter().map(|a| a.0));
    knots.push(hi);
    let mut total = 0.0;
    let mut level = 0.0;
    for (t, w) in knots.windows(2).enumerate() {
        if t >= 1 {
            level += atoms[t - 1].1;
        }
        let c = level;
        total += integrate(|x| (c - phi(x)).abs(), w[0], w[1], 1e-13);
    }
    total
}

/// `sup |F - Phi|` by checking both sides of every jump.
pub fn ks_brute(atoms: &[(f64, f64)]) -> f64 {
    let mut best: f64 = 0.0;
    let mut cum = 0.0;
    for &(x, p) in atoms {
        best = best.max((phi(x) - cum).abs());
        cum += p;
        best = best.max((cum - phi(x)).abs());
    }
    best
}
