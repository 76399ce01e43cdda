//! Direct and incremental evaluation of the surrogate polynomials.
//!
//! The smoother walks lattice lines, so the 15 polynomials are evaluated
//! with forward differences: a degree-q polynomial advances along a line
//! with q additions per weight. Line states themselves advance between
//! lines by forward differences in the `j` or `k` coordinate.
//!
//! All difference tables are built analytically from the coefficients
//! (monomials expanded in falling factorials via Stirling numbers), not by
//! subtracting nearby point values; that keeps the high-order differences
//! fully accurate and the long-line error at the roundoff level.

use super::SurrogateCoeffs;
use crate::fem::Stencil15;
use crate::mesh::CardinalDirection;

/// Evaluate one direction's surrogate polynomial at a node.
pub fn eval_direct(coeffs: &SurrogateCoeffs, w: CardinalDirection, i: u32, j: u32, k: u32) -> f64 {
    eval_direct_idx(coeffs, w.index(), i, j, k)
}

#[inline]
pub(crate) fn eval_direct_idx(
    coeffs: &SurrogateCoeffs,
    w: usize,
    i: u32,
    j: u32,
    k: u32,
) -> f64 {
    let basis = &coeffs.basis;
    let (xp, yp, zp) = basis.powers(i, j, k);
    let a = &coeffs.coeffs[w];
    let mut acc = 0.0;
    for (c, &(l, m, n)) in basis.exponents.iter().enumerate() {
        acc += a[c] * xp[l as usize] * yp[m as usize] * zp[n as usize];
    }
    acc
}

/// Evaluate all 15 surrogate polynomials at a node.
pub fn eval_stencil(coeffs: &SurrogateCoeffs, i: u32, j: u32, k: u32) -> Stencil15 {
    let basis = &coeffs.basis;
    let (xp, yp, zp) = basis.powers(i, j, k);
    let mut s = Stencil15::default();
    for (c, &(l, m, n)) in basis.exponents.iter().enumerate() {
        let phi = xp[l as usize] * yp[m as usize] * zp[n as usize];
        for w in 0..15 {
            s.0[w] += coeffs.coeffs[w][c] * phi;
        }
    }
    s
}

/// Stirling numbers of the second kind up to degree 4.
const S2: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 1.0, 0.0, 0.0],
    [0.0, 1.0, 3.0, 1.0, 0.0],
    [0.0, 1.0, 7.0, 6.0, 1.0],
];

#[inline]
fn falling(m: usize, r: usize) -> f64 {
    let mut acc = 1.0;
    for t in 0..r {
        acc *= (m - t) as f64;
    }
    acc
}

#[inline]
fn falling_pow(x0: u32, p: usize) -> f64 {
    let mut acc = 1.0;
    for t in 0..p {
        if x0 < t as u32 + 1 {
            return 0.0;
        }
        acc *= (x0 - t as u32) as f64;
    }
    acc
}

/// `out[l][r]` = forward difference of order `r` of the raw monomial `x^l`
/// at integer `x0`. Expansion in falling factorials; every term is
/// non-negative, so there is no cancellation and the result is accurate to
/// relative roundoff.
fn monomial_diff_table(x0: u32, q: usize) -> [[f64; 5]; 5] {
    let mut out = [[0.0; 5]; 5];
    for (l, row) in out.iter_mut().enumerate().take(q + 1) {
        for (r, slot) in row.iter_mut().enumerate().take(l + 1) {
            let mut acc = 0.0;
            for m in r..=l {
                acc += S2[l][m] * falling(m, r) * falling_pow(x0, m - r);
            }
            *slot = acc;
        }
    }
    out
}

/// Which axis a line state advances over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    J,
    K,
}

/// Incremental evaluation state for one lattice line `(0.., j, k)`.
///
/// Holds, per direction, the mixed forward-difference table anchored at
/// `(i=0, j, k)` plus the working `q+1` line differences consumed by
/// [`LineEvalState::step`].
#[derive(Debug, Clone)]
pub struct LineEvalState {
    q: usize,
    pub j: u32,
    pub k: u32,
    /// Position of the next emitted node in the line.
    pub d: u32,
    /// `table[slot][w]`: mixed difference of multi-order `exponents[slot]`.
    table: Vec<[f64; 15]>,
    /// For each slot `(r,s,t)`, the slot of `(r,s+1,t)` / `(r,s,t+1)`.
    adv_j: Vec<i32>,
    adv_k: Vec<i32>,
    /// `line[w][r]`: current i-direction differences of order `r`.
    line: [[f64; 5]; 15],
}

impl LineEvalState {
    /// Build the difference tables for line `(.., j0, k0)` analytically from
    /// the fitted coefficients.
    pub fn init(coeffs: &SurrogateCoeffs, j0: u32, k0: u32) -> Self {
        let basis = &coeffs.basis;
        let q = basis.degree as usize;
        let inv_n = basis.scaling();
        let dx = scaled_diff_table(0, inv_n, q);
        let dy = scaled_diff_table(j0, inv_n, q);
        let dz = scaled_diff_table(k0, inv_n, q);

        let m = basis.len();
        let mut table = vec![[0.0f64; 15]; m];
        for (target, &(r, s, t)) in basis.exponents.iter().enumerate() {
            for (src, &(l, mm, n)) in basis.exponents.iter().enumerate() {
                if l < r || mm < s || n < t {
                    continue;
                }
                let factor =
                    dx[l as usize][r as usize] * dy[mm as usize][s as usize] * dz[n as usize][t as usize];
                if factor == 0.0 {
                    continue;
                }
                for w in 0..15 {
                    table[target][w] += coeffs.coeffs[w][src] * factor;
                }
            }
        }

        let lookup = |l: u8, mm: u8, n: u8| -> i32 {
            if (l + mm + n) as u32 > basis.degree {
                return -1;
            }
            basis.index_of(l, mm, n) as i32
        };
        let adv_j: Vec<i32> = basis
            .exponents
            .iter()
            .map(|&(r, s, t)| lookup(r, s + 1, t))
            .collect();
        let adv_k: Vec<i32> = basis
            .exponents
            .iter()
            .map(|&(r, s, t)| lookup(r, s, t + 1))
            .collect();

        let mut state = Self {
            q,
            j: j0,
            k: k0,
            d: 0,
            table,
            adv_j,
            adv_k,
            line: [[0.0; 5]; 15],
        };
        state.reset_line();
        state
    }

    fn reset_line(&mut self) {
        self.line = [[0.0; 5]; 15];
        // slots (r, 0, 0) sit at the start of each r-group in exponent order
        let mut slot = 0;
        let mut per_r_offset = Vec::with_capacity(self.q + 1);
        for r in 0..=self.q {
            per_r_offset.push(slot);
            // number of (s, t) pairs with s + t <= q - r
            let rem = self.q - r;
            slot += (rem + 1) * (rem + 2) / 2;
        }
        for (r, &off) in per_r_offset.iter().enumerate() {
            for w in 0..15 {
                self.line[w][r] = self.table[off][w];
            }
        }
        self.d = 0;
    }

    /// Weights at the current position `d`; afterwards the state has moved
    /// to `d + 1` at the cost of `q` additions per weight.
    #[inline]
    pub fn step(&mut self) -> Stencil15 {
        let mut s = Stencil15::default();
        for w in 0..15 {
            s.0[w] = self.line[w][0];
            for r in 0..self.q {
                self.line[w][r] += self.line[w][r + 1];
            }
        }
        self.d += 1;
        s
    }

    /// Move the anchor one line in the given axis by forward differences in
    /// that coordinate and restart the line at `i = 0`.
    pub fn advance(&mut self, axis: Axis) {
        let adv = match axis {
            Axis::J => &self.adv_j,
            Axis::K => &self.adv_k,
        };
        for slot in 0..self.table.len() {
            let src = adv[slot];
            if src >= 0 {
                let add = self.table[src as usize];
                for w in 0..15 {
                    self.table[slot][w] += add[w];
                }
            }
        }
        match axis {
            Axis::J => self.j += 1,
            Axis::K => self.k += 1,
        }
        self.reset_line();
    }

    /// The `q+1` forward differences of direction `w` at the current line
    /// start (value, first difference, second-difference increment, ...).
    pub fn differences(&self, w: CardinalDirection) -> &[f64] {
        &self.line[w.index()][..=self.q]
    }
}

/// Difference table of the normalized monomial `(x/n)^l`: the raw table
/// scaled by `inv_n^l` per row.
fn scaled_diff_table(x0: u32, inv_n: f64, q: usize) -> [[f64; 5]; 5] {
    let mut t = monomial_diff_table(x0, q);
    let mut scale = 1.0;
    for row in t.iter_mut().take(q + 1) {
        for slot in row.iter_mut() {
            *slot *= scale;
        }
        scale *= inv_n;
    }
    t
}
