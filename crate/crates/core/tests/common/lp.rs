use adr_core::lpsolve::{LpProblem, Sense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random LP that is feasible by construction: rows are built around an
/// interior point of the box.
pub fn random_feasible_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpProblem {
    let mut p = LpProblem::new(n);
    let mut x0 = vec![0.0; n];
    for j in 0..n {
        let lo: f64 = rng.gen_range(-5.0..2.0);
        let hi = lo + rng.gen_range(0.5..6.0);
        p.lower[j] = lo;
        p.upper[j] = hi;
        p.objective[j] = rng.gen_range(-4.0..4.0);
        x0[j] = rng.gen_range(lo..hi);
    }
    for i in 0..m {
        let row: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.8) { rng.gen_range(-3.0..3.0) } else { 0.0 })
            .collect();
        let act: f64 = row.iter().zip(&x0).map(|(a, v)| a * v).sum();
        let (sense, rhs) = match (i, rng.gen_range(0..3)) {
            (0, 2) => (Sense::Eq, act),
            (_, 0) | (_, 2) => (Sense::Le, act + rng.gen_range(0.0..2.0)),
            _ => (Sense::Ge, act - rng.gen_range(0.0..2.0)),
        };
        p.add_row(row, sense, rhs);
    }
    p
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for cc in c..k {
                    a[r][cc] -= f * a[c][cc];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..k).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum objective over every basic feasible solution of `A x + s = b`.
pub fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
    let n = p.num_cols();
    let m = p.num_rows();
    let column = |j: usize, i: usize| if j < n { p.rows[i][j] } else if j - n == i { 1.0 } else { 0.0 };
    let slack_bounds = |i: usize| match p.senses[i] {
        Sense::Le => (0.0, f64::INFINITY),
        Sense::Eq => (0.0, 0.0),
        Sense::Ge => (f64::NEG_INFINITY, 0.0),
    };
    let bounds = |j: usize| if j < n { (p.lower[j], p.upper[j]) } else { slack_bounds(j - n) };
    let mut best: Option<f64> = None;
    for basis in combinations(n + m, m) {
        let nonbasic: Vec<usize> = (0..n + m).filter(|j| !basis.contains(j)).collect();
        let free_struct: Vec<usize> = nonbasic.iter().copied().filter(|&j| j < n).collect();
        for mask in 0..(1u32 << free_struct.len()) {
            let mut vals = vec![0.0; n + m];
            for &j in &nonbasic {
                let (l, u) = bounds(j);
                vals[j] = if j < n {
                    let bit = free_struct.iter().position(|&f| f == j).unwrap();
                    if mask >> bit & 1 == 1 { u } else { l }
                } else if l.is_finite() {
                    l
                } else {
                    u
                };
            }
            let a: Vec<Vec<f64>> = (0..m).map(|i| basis.iter().map(|&j| column(j, i)).collect()).collect();
            let rhs: Vec<f64> = (0..m)
                .map(|i| p.rhs[i] - nonbasic.iter().map(|&j| column(j, i) * vals[j]).sum::<f64>())
                .collect();
            let Some(xb) = solve_dense(a, rhs) else { continue };
            let feasible = basis.iter().zip(&xb).all(|(&j, &v)| {
                let (l, u) = bounds(j);
                v >= l - 1e-9 && v <= u + 1e-9
            });
            if !feasible {
                continue;
            }
            for (&j, &v) in basis.iter().zip(&xb) {
                vals[j] = v;
            }
            let obj = p.objective_value(&vals[..n]);
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

/// Relaxation of a small assignment-like 0-1 model with continuous columns.
pub fn random_mixed_lp(rng: &mut ChaCha8Rng) -> (LpProblem, usize) {
    let nb = rng.gen_range(4..9);
    let nc = rng.gen_range(1..4);
    let n = nb + nc;
    let mut p = LpProblem::new(n);
    for j in 0..n {
        p.objective[j] = rng.gen_range(-5.0..8.0);
        p.upper[j] = if j < nb { 1.0 } else { rng.gen_range(1.0..10.0) };
    }
    // cover row: all but two binaries, couple continuous columns to binaries
    let mut row = vec![0.0; n];
    row[..nb].iter_mut().for_each(|v| *v = 1.0);
    p.add_row(row, Sense::Ge, (nb - 2) as f64);
    for k in 0..nc {
        let mut row = vec![0.0; n];
        row[nb + k] = 1.0;
        row[rng.gen_range(0..nb)] = -p.upper[nb + k];
        p.add_row(row, Sense::Le, 0.0);
    }
    for _ in 0..rng.gen_range(1..4) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
        let cap = row.iter().zip(&p.upper).map(|(a, u)| a * u).sum::<f64>() * rng.gen_range(0.4..0.9);
        p.add_row(row, Sense::Le, cap);
    }
    (p, nb)
}
