//! Implicit-shift QL iteration for symmetric tridiagonal matrices.
//!
//! The classic EISPACK `tql2` loop, with the eigenvector update exposed as
//! a rotation callback so the two callers can accumulate what they need:
//! the quadrature module rotates only the first row of the eigenvector
//! matrix (Golub–Welsch needs just the first components), the spectral
//! module rotates full columns of its Householder accumulation.

/// Diagonalizes the tridiagonal matrix given by `d` (diagonal, length n)
/// and `e` (subdiagonal, length n, `e[n-1]` is scratch). On success `d`
/// holds the eigenvalues in the order the iteration produced them (not
/// sorted). Every plane rotation applied to the matrix is reported as
/// `rotate(i, c, s)`; an accumulator tracking eigenvector coordinates
/// must apply, for each of its rows `v`,
/// `(v[i], v[i+1]) <- (c*v[i] - s*v[i+1], s*v[i] + c*v[i+1])`.
///
/// `max_iters` caps the total number of QL sweeps; exceeding it returns
/// `Err(())` and the contents of `d`/`e` are unspecified.
pub(crate) fn ql_implicit_shift(
    d: &mut [f64],
    e: &mut [f64],
    max_iters: usize,
    mut rotate: impl FnMut(usize, f64, f64),
) -> Result<(), ()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    assert_eq!(e.len(), n, "subdiagonal must have length n (last entry scratch)");
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut shift = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let mut iters = 0usize;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        loop {
            // Look for a negligible subdiagonal element.
            let mut m = l;
            while m < n - 1 {
                if e[m].abs() <= eps * tst1 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }

            iters += 1;
            if iters > max_iters {
                return Err(());
            }

            // Wilkinson-style implicit shift.
            let g = d[l];
            let mut p = (d[l + 1] - g) / (2.0 * e[l]);
            let mut r = p.hypot(1.0);
            if p < 0.0 {
                r = -r;
            }
            d[l] = e[l] / (p + r);
            d[l + 1] = e[l] * (p + r);
            let dl1 = d[l + 1];
            let mut h = g - d[l];
            for i in (l + 2)..n {
                d[i] -= h;
            }
            shift += h;

            // Implicit QL sweep from m-1 down to l.
            p = d[m];
            let mut c = 1.0_f64;
            let mut c2 = c;
            let mut c3 = c;
            let el1 = e[l + 1];
            let mut s = 0.0_f64;
            let mut s2 = 0.0_f64;
            for i in (l..m).rev() {
                c3 = c2;
                c2 = c;
                s2 = s;
                let gg = c * e[i];
                h = c * p;
                r = p.hypot(e[i]);
                e[i + 1] = s * r;
                s = e[i] / r;
                c = p / r;
                p = c * d[i] - s * gg;
                d[i + 1] = h + s * (c * gg + s * d[i]);
                rotate(i, c, s);
            }
            p = -s * s2 * c3 * el1 * e[l] / dl1;
            e[l] = s * p;
            d[l] = c * p;

            if e[l].abs() <= eps * tst1 {
                break;
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_by_hand() {
        // [[0,1],[1,0]] has eigenvalues ±1.
        let mut d = vec![0.0, 0.0];
        let mut e = vec![1.0, 0.0];
        ql_implicit_shift(&mut d, &mut e, 100, |_, _, _| {}).unwrap();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((d[0] + 1.0).abs() < 1e-14);
        assert!((d[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn already_diagonal() {
        let mut d = vec![2.0, 2.0, 2.0];
        let mut e = vec![0.0, 0.0, 0.0];
        ql_implicit_shift(&mut d, &mut e, 100, |_, _, _| {}).unwrap();
        assert_eq!(d, vec![2.0, 2.0, 2.0]);
    }
}
