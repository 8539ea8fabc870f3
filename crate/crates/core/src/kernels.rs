//! In-place kernels on column-major `d x d` operators and length-`d` vectors.
//!
//! A qubit is addressed by its bit mask in the computational-basis index
//! (qubit 0 is the most significant bit). Element `(r, c)` lives at `c * d + r`.

use num_complex::Complex64 as C64;

pub(crate) type Mat2 = [[C64; 2]; 2];

#[inline]
pub(crate) fn mask_of(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// Indices in `0..d` whose `mask` bit is clear.
#[inline]
fn low_indices(d: usize, mask: usize) -> impl Iterator<Item = usize> {
    (0..d).filter(move |i| i & mask == 0)
}

/// `m <- u m u^dagger` for a single-qubit `u`.
pub(crate) fn conj_1q(m: &mut [C64], d: usize, mask: usize, u: &Mat2) {
    left_1q(m, d, mask, u);
    // m u^dagger: columns c0, c1 mix with conj(u) entries.
    let (a, b) = (u[0][0].conj(), u[0][1].conj());
    let (c, e) = (u[1][0].conj(), u[1][1].conj());
    for c0 in low_indices(d, mask) {
        let c1 = c0 | mask;
        for r in 0..d {
            let x = m[c0 * d + r];
            let y = m[c1 * d + r];
            m[c0 * d + r] = x * a + y * b;
            m[c1 * d + r] = x * c + y * e;
        }
    }
}

/// `m <- u m` for a single-qubit `u`.
pub(crate) fn left_1q(m: &mut [C64], d: usize, mask: usize, u: &Mat2) {
    for col in m.chunks_exact_mut(d) {
        apply_1q_vec(col, mask, u);
    }
}

/// `v <- u v` for a single-qubit `u`.
pub(crate) fn apply_1q_vec(v: &mut [C64], mask: usize, u: &Mat2) {
    let d = v.len();
    for r0 in low_indices(d, mask) {
        let r1 = r0 | mask;
        let x = v[r0];
        let y = v[r1];
        v[r0] = u[0][0] * x + u[0][1] * y;
        v[r1] = u[1][0] * x + u[1][1] * y;
    }
}

/// Controlled-X as a basis permutation, `m <- CX m CX`.
pub(crate) fn conj_cx(m: &mut [C64], d: usize, control: usize, target: usize) {
    for col in m.chunks_exact_mut(d) {
        cx_vec(col, control, target);
    }
    for c0 in (0..d).filter(|i| i & control != 0 && i & target == 0) {
        let c1 = c0 | target;
        for r in 0..d {
            m.swap(c0 * d + r, c1 * d + r);
        }
    }
}

pub(crate) fn cx_vec(v: &mut [C64], control: usize, target: usize) {
    for r0 in (0..v.len()).filter(|i| i & control != 0 && i & target == 0) {
        v.swap(r0, r0 | target);
    }
}

/// Scale every coherence between the two values of the masked bit.
pub(crate) fn scale_coherences(m: &mut [C64], d: usize, mask: usize, factor: f64) {
    for c in 0..d {
        let cb = c & mask;
        for r in 0..d {
            if r & mask != cb {
                m[c * d + r] *= factor;
            }
        }
    }
}

/// Amplitude damping with Kraus pair `diag(1, sqrt(1-w))`, `sqrt(w)|0><1|`.
pub(crate) fn amp_damp(m: &mut [C64], d: usize, mask: usize, omega: f64) {
    let s = (1.0 - omega).sqrt();
    for c0 in low_indices(d, mask) {
        let c1 = c0 | mask;
        for r0 in low_indices(d, mask) {
            let r1 = r0 | mask;
            let p11 = m[c1 * d + r1];
            m[c0 * d + r0] += p11 * omega;
            m[c1 * d + r0] *= s;
            m[c0 * d + r1] *= s;
            m[c1 * d + r1] = p11 * (1.0 - omega);
        }
    }
}

/// Heisenberg-picture dual of [`amp_damp`].
pub(crate) fn amp_damp_dual(m: &mut [C64], d: usize, mask: usize, omega: f64) {
    let s = (1.0 - omega).sqrt();
    for c0 in low_indices(d, mask) {
        let c1 = c0 | mask;
        for r0 in low_indices(d, mask) {
            let r1 = r0 | mask;
            let p00 = m[c0 * d + r0];
            m[c1 * d + r0] *= s;
            m[c0 * d + r1] *= s;
            m[c1 * d + r1] = m[c1 * d + r1] * (1.0 - omega) + p00 * omega;
        }
    }
}

/// `m <- (1-p) m + p |phi><phi|_q (x) Tr_q(m)`.
pub(crate) fn reset(m: &mut [C64], d: usize, mask: usize, p: f64, phi: &[C64; 2]) {
    let proj = projector(phi);
    for c0 in low_indices(d, mask) {
        let cols = [c0, c0 | mask];
        for r0 in low_indices(d, mask) {
            let rows = [r0, r0 | mask];
            let reduced = m[c0 * d + r0] + m[cols[1] * d + rows[1]];
            for (a, &r) in rows.iter().enumerate() {
                for (b, &c) in cols.iter().enumerate() {
                    let e = &mut m[c * d + r];
                    *e = *e * (1.0 - p) + proj[a][b] * reduced * p;
                }
            }
        }
    }
}

/// Heisenberg-picture dual of [`reset`]: `(1-p) m + p I_q (x) <phi|m|phi>_q`.
pub(crate) fn reset_dual(m: &mut [C64], d: usize, mask: usize, p: f64, phi: &[C64; 2]) {
    for c0 in low_indices(d, mask) {
        let cols = [c0, c0 | mask];
        for r0 in low_indices(d, mask) {
            let rows = [r0, r0 | mask];
            let mut contracted = C64::new(0.0, 0.0);
            for (a, &r) in rows.iter().enumerate() {
                for (b, &c) in cols.iter().enumerate() {
                    contracted += phi[a].conj() * m[c * d + r] * phi[b];
                }
            }
            for (a, &r) in rows.iter().enumerate() {
                for (b, &c) in cols.iter().enumerate() {
                    let e = &mut m[c * d + r];
                    *e *= 1.0 - p;
                    if a == b {
                        *e += contracted * p;
                    }
                }
            }
        }
    }
}

/// `C[a][b] = sum_{r',c'} m[r'a, c'b] * s[c'b.., r'a..]` where `s` is the
/// reduced operator `Tr_q(rho)`. With this, `Tr(m (Q (x)_q Tr_q rho)) =
/// sum_ab C[a][b] Q[b][a]`.
pub(crate) fn reset_contraction(m: &[C64], rho: &[C64], d: usize, mask: usize) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for c0 in low_indices(d, mask) {
        let c1 = c0 | mask;
        for r0 in low_indices(d, mask) {
            let r1 = r0 | mask;
            // reduced[c', r'] = rho[c'0, r'0] + rho[c'1, r'1]
            let reduced = rho[r0 * d + c0] + rho[r1 * d + c1];
            let rows = [r0, r1];
            let cols = [c0, c1];
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += m[cols[b] * d + rows[a]] * reduced;
                }
            }
        }
    }
    out
}

/// `Tr(a b)` for two `d x d` column-major operators.
pub(crate) fn trace_product(a: &[C64], b: &[C64], d: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for c in 0..d {
        for r in 0..d {
            acc += a[c * d + r] * b[r * d + c];
        }
    }
    acc
}

/// `Tr(a P_q b)` for a Pauli `P` on the masked qubit; `axis` 0/1/2 = X/Y/Z.
pub(crate) fn trace_with_pauli(a: &[C64], b: &[C64], d: usize, mask: usize, axis: u8) -> C64 {
    // (P b)[k, r] = coef(k) * b[k ^ flip, r]
    let i = C64::new(0.0, 1.0);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..d {
        let bit = k & mask != 0;
        let (src, coef) = match axis {
            0 => (k ^ mask, C64::new(1.0, 0.0)),
            1 => (k ^ mask, if bit { i } else { -i }),
            _ => (k, C64::new(if bit { -1.0 } else { 1.0 }, 0.0)),
        };
        let mut row = C64::new(0.0, 0.0);
        for r in 0..d {
            // a[r, k] * b[src, r]
            row += a[k * d + r] * b[r * d + src];
        }
        acc += row * coef;
    }
    acc
}

pub(crate) fn projector(phi: &[C64; 2]) -> Mat2 {
    [
        [phi[0] * phi[0].conj(), phi[0] * phi[1].conj()],
        [phi[1] * phi[0].conj(), phi[1] * phi[1].conj()],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn cx_permutes_basis_states() {
        // |10> -> |11> with control qubit 0 (mask 2), target qubit 1 (mask 1).
        let mut v = vec![c(0.0), c(0.0), c(1.0), c(0.0)];
        cx_vec(&mut v, 2, 1);
        assert_eq!(v[3], c(1.0));
        assert_eq!(v[2], c(0.0));
    }

    #[test]
    fn reset_on_single_qubit() {
        let mut m = vec![c(0.0), c(0.0), c(0.0), c(1.0)];
        reset(&mut m, 2, 1, 0.5, &[c(1.0), c(0.0)]);
        assert!((m[0] - c(0.5)).norm() < 1e-15);
        assert!((m[3] - c(0.5)).norm() < 1e-15);
    }
}
