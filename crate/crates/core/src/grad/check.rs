//! Central finite-difference oracle for gradient checks.
//!
//! Only forward values are used to build the numerical gradient, so the
//! oracle is independent of every backward rule it is checking.

use super::{relative_error, tolerance::FD_STEP, Matrix, ParamStore, Tape, Var};

/// Compares analytic and numerical gradients of `f` with respect to each of
/// `inputs`, returning the relative error over all entries.
pub fn input_gradient_error<F>(inputs: &[Matrix], f: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let eval = |vals: &[Matrix]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = vals.iter().map(|m| tape.leaf(m.clone())).collect();
        let out = f(&mut tape, &vars);
        (tape, vars, out)
    };
    let (tape, vars, out) = eval(inputs);
    let grads = tape.backward(out).expect("scalar loss");
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for (k, m) in inputs.iter().enumerate() {
        let g = grads
            .wrt(vars[k])
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(m.rows(), m.cols()));
        analytic.extend_from_slice(g.data());
        for j in 0..m.len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[j] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[j] -= FD_STEP;
            let (tp, _, op) = eval(&plus);
            let (tm, _, om) = eval(&minus);
            numeric.push((tp.value(op).item() - tm.value(om).item()) / (2.0 * FD_STEP));
        }
    }
    relative_error(&analytic, &numeric)
}

/// Same check against parameters of a store. `coords` limits the check to
/// at most that many `(param, entry)` coordinates, chosen by a fixed stride.
pub fn param_gradient_error<F>(store: &ParamStore, coords: usize, f: F) -> f64
where
    F: Fn(&mut Tape, &ParamStore) -> Var,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, store);
    let grads = tape.backward(out).expect("scalar loss").for_params(store);
    let total: usize = store.scalar_count();
    let stride = (total / coords.max(1)).max(1);
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut flat = 0usize;
    for (id, _, m) in store.iter() {
        for j in 0..m.len() {
            if flat % stride == 0 {
                analytic.push(grads[id.index()].data()[j]);
                let value_at = |delta: f64| {
                    let mut s = store.clone();
                    s.get_mut(id).data_mut()[j] += delta;
                    let mut t = Tape::new();
                    let o = f(&mut t, &s);
                    t.value(o).item()
                };
                numeric.push((value_at(FD_STEP) - value_at(-FD_STEP)) / (2.0 * FD_STEP));
            }
            flat += 1;
        }
    }
    relative_error(&analytic, &numeric)
}
