//! Eigenvalues of small dense real matrices.
//!
//! Classic three-stage pipeline: Parlett–Reinsch balancing with radix 2,
//! reduction to upper Hessenberg form by stabilised elementary similarity
//! transforms, then the Francis double-shift QR iteration on the Hessenberg
//! matrix. Only eigenvalues are computed; no Schur vectors are accumulated.

use num_complex::Complex64;

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// Iterations allowed per eigenvalue (or pair) are this times `max(n, 10)`.
const ITERATIONS_PER_ROW: usize = 30;

/// Row-major square matrix scratch buffer.
struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// All eigenvalues of the `n x n` row-major matrix `data`, in no particular order.
pub fn eigenvalues(data: &[f64], n: usize) -> Result<Vec<Complex64>> {
    assert_eq!(data.len(), n * n, "matrix buffer must hold n*n entries");
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex64::new(data[0], 0.0)]),
        _ => {}
    }
    let mut a = Square {
        n,
        data: data.to_vec(),
    };
    balance(&mut a);
    reduce_to_hessenberg(&mut a);
    hessenberg_qr(&mut a)
}

fn balance(a: &mut Square) {
    let n = a.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a.get(j, i).abs();
                    r += a.get(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    *a.at(i, j) *= g;
                }
                for j in 0..n {
                    *a.at(j, i) *= f;
                }
            }
        }
    }
}

/// Gaussian elimination with pivoting down to upper Hessenberg form.
/// Entries below the first subdiagonal are zeroed on exit.
fn reduce_to_hessenberg(a: &mut Square) {
    let n = a.n;
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0f64;
        let mut pivot = m;
        for j in m..n {
            if a.get(j, m - 1).abs() > x.abs() {
                x = a.get(j, m - 1);
                pivot = j;
            }
        }
        if pivot != m {
            for j in (m - 1)..n {
                a.data.swap(pivot * n + j, m * n + j);
            }
            for j in 0..n {
                a.data.swap(j * n + pivot, j * n + m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a.get(i, m - 1);
                if y != 0.0 {
                    y /= x;
                    a.set(i, m - 1, y);
                    for j in m..n {
                        let v = a.get(m, j);
                        *a.at(i, j) -= y * v;
                    }
                    for j in 0..n {
                        let v = a.get(j, i);
                        *a.at(j, m) += y * v;
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..(i - 1) {
            a.set(i, j, 0.0);
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `a`).
fn hessenberg_qr(a: &mut Square) -> Result<Vec<Complex64>> {
    let n = a.n;
    let mut out = vec![Complex64::new(0.0, 0.0); n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a.get(i, j).abs();
        }
    }

    // Signed indices keep the deflation bookkeeping readable.
    let at = |a: &Square, i: isize, j: isize| a.get(i as usize, j as usize);
    let max_iterations = ITERATIONS_PER_ROW * n.max(10);
    let mut nn: isize = n as isize - 1;

    while nn >= 0 {
        let mut its = 0;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let mut s = at(a, l - 1, l - 1).abs() + at(a, l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at(a, l, l - 1).abs() + s == s {
                    a.set(l as usize, (l - 1) as usize, 0.0);
                    break;
                }
                l -= 1;
            }

            let mut x = at(a, nn, nn);
            if l == nn {
                out[nn as usize] = Complex64::new(x, 0.0);
                nn -= 1;
                break;
            }

            let mut y = at(a, nn - 1, nn - 1);
            let mut w = at(a, nn, nn - 1) * at(a, nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let (hi, lo) = ((nn - 1) as usize, nn as usize);
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    out[hi] = Complex64::new(x + z, 0.0);
                    out[lo] = if z != 0.0 {
                        Complex64::new(x - w / z, 0.0)
                    } else {
                        Complex64::new(x + z, 0.0)
                    };
                } else {
                    out[hi] = Complex64::new(x + p, -z);
                    out[lo] = Complex64::new(x + p, z);
                }
                nn -= 2;
                break;
            }

            if its == max_iterations {
                return Err(Error::EigenNoConvergence { dimension: n });
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift, alternating between the top and the
                // bottom of the active block to break cycles.
                let (s, base) = if its % 20 == 10 {
                    (
                        at(a, l + 1, l).abs() + at(a, l + 2, l + 1).abs(),
                        at(a, l, l),
                    )
                } else {
                    (
                        at(a, nn, nn - 1).abs() + at(a, nn - 1, nn - 2).abs(),
                        at(a, nn, nn),
                    )
                };
                x = 0.75 * s + base;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Find two consecutive small subdiagonal elements.
            let (mut p, mut q, mut r);
            let mut m = nn - 2;
            loop {
                let z = at(a, m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / at(a, m + 1, m) + at(a, m, m + 1);
                q = at(a, m + 1, m + 1) - z - rr - ss;
                r = at(a, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = at(a, m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (at(a, m - 1, m - 1).abs() + z.abs() + at(a, m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=nn {
                a.set(i as usize, (i - 2) as usize, 0.0);
                if i != m + 2 {
                    a.set(i as usize, (i - 3) as usize, 0.0);
                }
            }

            // Double QR step on rows l..nn and columns m..nn.
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at(a, k, k - 1);
                    q = at(a, k + 1, k - 1);
                    r = if k != nn - 1 {
                        at(a, k + 2, k - 1)
                    } else {
                        0.0
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            let v = at(a, k, k - 1);
                            a.set(k as usize, (k - 1) as usize, -v);
                        }
                    } else {
                        a.set(k as usize, (k - 1) as usize, -s * x);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let (ku, ju) = (k as usize, j as usize);
                        let mut pp = a.get(ku, ju) + q * a.get(ku + 1, ju);
                        if k != nn - 1 {
                            pp += r * a.get(ku + 2, ju);
                            *a.at(ku + 2, ju) -= pp * z;
                        }
                        *a.at(ku + 1, ju) -= pp * y;
                        *a.at(ku, ju) -= pp * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        let (iu, ku) = (i as usize, k as usize);
                        let mut pp = x * a.get(iu, ku) + y * a.get(iu, ku + 1);
                        if k != nn - 1 {
                            pp += z * a.get(iu, ku + 2);
                            *a.at(iu, ku + 2) -= pp * r;
                        }
                        *a.at(iu, ku + 1) -= pp * q;
                        *a.at(iu, ku) -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
