use crate::blockspace::{BlockVector, DenseMatrix};
use crate::error::{shape_err, Error, Result};
use crate::operators::OperatorTriple;
use crate::structure::{build_k, SplittingDesign};

type Sparse = Vec<Vec<(usize, f64)>>;

fn nonzero_rows(a: &DenseMatrix) -> Sparse {
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect()
        })
        .collect()
}

/// Row at which each column of `coef` is first needed, checked against the
/// rows `arg` (stored column-major as `arg[h] = [(j, weight)]`) feeding it.
fn triggers(name: &str, coef: &DenseMatrix, arg_by_row: &Sparse) -> Result<Vec<Vec<usize>>> {
    let n = coef.rows();
    let mut out = vec![Vec::new(); n];
    for j in 0..coef.cols() {
        let Some(first) = (0..n).find(|&i| coef[(i, j)] != 0.0) else {
            continue;
        };
        if let Some(h) = (first..n).find(|&h| arg_by_row[h].iter().any(|&(jj, _)| jj == j)) {
            return Err(Error::Design(format!(
                "{} operator {} is needed at row {} but its argument uses row {}",
                name,
                j + 1,
                first + 1,
                h + 1
            )));
        }
        out[first].push(j);
    }
    Ok(out)
}

/// Precomputed sparsity and evaluation schedule of one sweep.
///
/// Each forward operator is evaluated once per argument, at the first row
/// whose coefficient is nonzero; by causality its argument only involves
/// rows already computed.
#[derive(Clone, Debug)]
pub(crate) struct SweepPlan {
    pub n: usize,
    pub dim: usize,
    pub d: Vec<f64>,
    lower: Sparse,
    h_rows: Sparse,
    pq_rows: Sparse,
    q_rows: Sparse,
    g_by_row: Sparse,
    r_by_row: Sparse,
    p_by_row: Sparse,
    b_at: Vec<Vec<usize>>,
    cr_at: Vec<Vec<usize>>,
    cp_at: Vec<Vec<usize>>,
    // Scratch.
    g_arg: Vec<f64>,
    r_arg: Vec<f64>,
    p_arg: Vec<f64>,
    b_val: Vec<f64>,
    cr_val: Vec<f64>,
    cp_val: Vec<f64>,
    input: Vec<f64>,
}

impl SweepPlan {
    pub fn new(problem: &OperatorTriple, design: &SplittingDesign) -> Result<Self> {
        let (n, m, l, dim) = (design.n(), design.m(), design.l(), problem.dim());
        if (problem.n(), problem.m(), problem.l()) != (n, m, l) {
            return shape_err(format!(
                "problem has (n, m, l) = ({}, {}, {}), design has ({}, {}, {})",
                problem.n(),
                problem.m(),
                problem.l(),
                n,
                m,
                l
            ));
        }
        let km = build_k(design, &problem.sigmas(), &problem.lips())?;
        let lower = nonzero_rows(&km.k.strict_lower());
        let pq = design.p().sub(design.q())?;
        let g_by_row = nonzero_rows(&design.g().transpose());
        let r_by_row = nonzero_rows(&design.r().transpose());
        let p_by_row = nonzero_rows(design.p());
        Ok(Self {
            n,
            dim,
            d: km.d,
            lower,
            h_rows: nonzero_rows(design.h()),
            pq_rows: nonzero_rows(&pq),
            q_rows: nonzero_rows(design.q()),
            b_at: triggers("cocoercive", design.h(), &g_by_row)?,
            cr_at: triggers("Lipschitz (R-argument)", &pq, &r_by_row)?,
            cp_at: triggers("Lipschitz (P-argument)", design.q(), &p_by_row)?,
            g_by_row,
            r_by_row,
            p_by_row,
            g_arg: vec![0.0; m * dim],
            r_arg: vec![0.0; l * dim],
            p_arg: vec![0.0; l * dim],
            b_val: vec![0.0; m * dim],
            cr_val: vec![0.0; l * dim],
            cp_val: vec![0.0; l * dim],
            input: vec![0.0; dim],
        })
    }

    /// One Gauss–Seidel pass: `drive` holds the governor term of each row
    /// (`Mz` in base form, `w` in lifted form) before scaling by `d_i`.
    pub fn sweep(&mut self, problem: &OperatorTriple, drive: &BlockVector, x: &mut BlockVector) {
        let dim = self.dim;
        for buf in [&mut self.g_arg, &mut self.r_arg, &mut self.p_arg] {
            buf.iter_mut().for_each(|v| *v = 0.0);
        }
        let (b, c) = (problem.cocoercive(), problem.lipschitz());
        for i in 0..self.n {
            for &j in &self.b_at[i] {
                let s = j * dim..(j + 1) * dim;
                b[j].apply_into(&self.g_arg[s.clone()], &mut self.b_val[s]);
            }
            for &j in &self.cr_at[i] {
                let s = j * dim..(j + 1) * dim;
                c[j].apply_into(&self.r_arg[s.clone()], &mut self.cr_val[s]);
            }
            for &j in &self.cp_at[i] {
                let s = j * dim..(j + 1) * dim;
                c[j].apply_into(&self.p_arg[s.clone()], &mut self.cp_val[s]);
            }
            let v = &mut self.input;
            v.copy_from_slice(drive.block(i));
            let terms = [
                (&self.lower[i], x.as_flat()),
                (&self.h_rows[i], &self.b_val[..]),
                (&self.pq_rows[i], &self.cr_val[..]),
                (&self.q_rows[i], &self.cp_val[..]),
            ];
            for (row, src) in terms {
                for &(j, a) in row {
                    for (vk, sk) in v.iter_mut().zip(&src[j * dim..(j + 1) * dim]) {
                        *vk -= a * sk;
                    }
                }
            }
            let di = self.d[i];
            v.iter_mut().for_each(|vk| *vk *= di);
            problem.resolvents()[i].resolve_into(di, v, x.block_mut(i));
            let xi = x.block(i);
            for (by_row, arg) in [
                (&self.g_by_row, &mut self.g_arg),
                (&self.r_by_row, &mut self.r_arg),
                (&self.p_by_row, &mut self.p_arg),
            ] {
                for &(j, a) in &by_row[i] {
                    for (t, xk) in arg[j * dim..(j + 1) * dim].iter_mut().zip(xi) {
                        *t += a * xk;
                    }
                }
            }
        }
    }
}
