//! Dense brute-force reference computations shared by the integration tests.
//!
//! Nothing here touches the sparse engine: states are flat arrays, operators
//! are explicit matrices built with Kronecker products, and probabilities
//! come from traces against projectors. The engine is checked against these.

#![allow(dead_code)]

pub mod strategies;

use num_complex::Complex64 as C64;

pub type Matrix = Vec<Vec<C64>>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { c(1.0) } else { c(0.0) })
                .collect()
        })
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = (a.len(), a[0].len());
    let (rb, cb) = (b.len(), b[0].len());
    let mut out = vec![vec![c(0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    let mut out = vec![vec![c(0.0); m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut acc = c(0.0);
            for k in 0..inner {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn matvec(a: &Matrix, v: &[C64]) -> Vec<C64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn dagger(a: &Matrix) -> Matrix {
    let n = a.len();
    let m = a[0].len();
    (0..m)
        .map(|j| (0..n).map(|i| a[i][j].conj()).collect())
        .collect()
}

/// Unit eigenvector of the real symmetric matrix [[p, q], [q, r]] for the
/// eigenvalue `lambda`, by the closed-form null-space construction.
fn symmetric_eigenvector(p: f64, q: f64, r: f64, lambda: f64) -> [f64; 2] {
    let v = if q.abs() > 1e-15 {
        [q, lambda - p]
    } else if (lambda - p).abs() < (lambda - r).abs() {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// Eigenvectors of the spin observable cos(θ)σz + sin(θ)σx, found by solving
/// the 2×2 eigenproblem directly (no half-angle formulas). Index 0 is the +1
/// eigenvector, index 1 the −1 eigenvector, each fixed to a non-negative first
/// nonzero component.
pub fn spin_eigenvectors(theta: f64) -> [[f64; 2]; 2] {
    let (p, q, r) = (theta.cos(), theta.sin(), -theta.cos());
    let tr = p + r;
    let det = p * r - q * q;
    let disc = (tr * tr / 4.0 - det).sqrt();
    let plus = symmetric_eigenvector(p, q, r, tr / 2.0 + disc);
    let minus = symmetric_eigenvector(p, q, r, tr / 2.0 - disc);
    [fix_sign(plus), fix_sign(minus)]
}

fn fix_sign(v: [f64; 2]) -> [f64; 2] {
    let lead = if v[0].abs() > 1e-15 { v[0] } else { v[1] };
    if lead < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

pub fn projector(v: [f64; 2]) -> Matrix {
    (0..2)
        .map(|i| (0..2).map(|j| c(v[i] * v[j])).collect())
        .collect()
}

/// Singlet on two z-basis electrons, index = 2*s1 + s2 with 0 = up.
pub fn singlet() -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![c(0.0), c(h), c(-h), c(0.0)]
}

/// Joint outcome probabilities p[s][t] for the singlet measured along
/// `a` (electron 1) and `b` (electron 2), from Tr(ρ · P_s(a) ⊗ P_t(b)).
pub fn density_matrix_joint(a: f64, b: f64) -> [[f64; 2]; 2] {
    let psi = singlet();
    let rho: Matrix = (0..4)
        .map(|i| (0..4).map(|j| psi[i] * psi[j].conj()).collect())
        .collect();
    let ea = spin_eigenvectors(a);
    let eb = spin_eigenvectors(b);
    let mut p = [[0.0; 2]; 2];
    for s in 0..2 {
        for t in 0..2 {
            let proj = kron(&projector(ea[s]), &projector(eb[t]));
            let prod = matmul(&rho, &proj);
            let tr: C64 = (0..4).map(|i| prod[i][i]).sum();
            p[s][t] = tr.re;
        }
    }
    p
}

pub fn density_matrix_correlation(a: f64, b: f64) -> f64 {
    let p = density_matrix_joint(a, b);
    p[0][0] - p[0][1] - p[1][0] + p[1][1]
}

/// Measurement interaction on one electron ⊗ one 3-level apparatus
/// (0 = ready, 1 = recorded up, 2 = recorded down) along angle `theta`:
/// Σ_s |e_s⟩⟨e_s| ⊗ (ready ↔ recorded(s) swap).
pub fn interaction_matrix(theta: f64) -> Matrix {
    let e = spin_eigenvectors(theta);
    let mut u = vec![vec![c(0.0); 6]; 6];
    for (s, vec) in e.iter().enumerate() {
        let proj = projector(*vec);
        let rec = s + 1;
        let mut swap = identity(3);
        swap[0][0] = c(0.0);
        swap[rec][rec] = c(0.0);
        swap[0][rec] = c(1.0);
        swap[rec][0] = c(1.0);
        let term = kron(&proj, &swap);
        for i in 0..6 {
            for j in 0..6 {
                u[i][j] += term[i][j];
            }
        }
    }
    u
}

/// Permutes a 6×6 operator on (electron ⊗ apparatus) into the 36-dimensional
/// space ordered e1 ⊗ e2 ⊗ m1 ⊗ m2 for lab `lab` (1 or 2).
pub fn embed_lab_operator(op: &Matrix, lab: usize) -> Matrix {
    let mut full = vec![vec![c(0.0); 36]; 36];
    let idx = |s1: usize, s2: usize, m1: usize, m2: usize| ((s1 * 2 + s2) * 3 + m1) * 3 + m2;
    for s1 in 0..2 {
        for s2 in 0..2 {
            for m1 in 0..3 {
                for m2 in 0..3 {
                    for t in 0..2 {
                        for n in 0..3 {
                            let (row, local_row, local_col) = if lab == 1 {
                                (idx(t, s2, n, m2), t * 3 + n, s1 * 3 + m1)
                            } else {
                                (idx(s1, t, m1, n), t * 3 + n, s2 * 3 + m2)
                            };
                            let col = idx(s1, s2, m1, m2);
                            full[row][col] += op[local_row][local_col];
                        }
                    }
                }
            }
        }
    }
    full
}

/// U₂U₁ applied to singlet ⊗ ready ⊗ ready; returns the 36 amplitudes,
/// index ((s1*2+s2)*3+m1)*3+m2 with z-basis electrons.
pub fn two_lab_amplitudes(a: f64, b: f64) -> Vec<C64> {
    let psi = singlet();
    let mut full = vec![c(0.0); 36];
    for s in 0..4 {
        full[s * 9] = psi[s];
    }
    let u1 = embed_lab_operator(&interaction_matrix(a), 1);
    let u2 = embed_lab_operator(&interaction_matrix(b), 2);
    let u = matmul(&u2, &u1);
    matvec(&u, &full)
}

/// Weight of each apparatus-record pair (m1, m2), m ∈ {1 = up, 2 = down},
/// summed over electron configurations.
pub fn two_lab_record_weights(a: f64, b: f64) -> [[f64; 2]; 2] {
    let amps = two_lab_amplitudes(a, b);
    let mut w = [[0.0; 2]; 2];
    for s1 in 0..2 {
        for s2 in 0..2 {
            for m1 in 1..3 {
                for m2 in 1..3 {
                    let i = ((s1 * 2 + s2) * 3 + m1) * 3 + m2;
                    w[m1 - 1][m2 - 1] += amps[i].norm_sqr();
                }
            }
        }
    }
    w
}

pub fn two_lab_record_correlation(a: f64, b: f64) -> f64 {
    let w = two_lab_record_weights(a, b);
    w[0][0] - w[0][1] - w[1][0] + w[1][1]
}

/// Every deterministic local assignment (A(a), A(a'), B(b), B(b')) ∈ {±1}⁴
/// with its CHSH value, enumerated independently of the library.
pub fn local_strategies() -> Vec<([i32; 4], i32)> {
    let mut out = Vec::new();
    for bits in 0..16u32 {
        let v: Vec<i32> = (0..4)
            .map(|k| if bits >> k & 1 == 0 { 1 } else { -1 })
            .collect();
        let (a, a2, b, b2) = (v[0], v[1], v[2], v[3]);
        out.push(([a, a2, b, b2], a * b - a * b2 + a2 * b + a2 * b2));
    }
    out
}
