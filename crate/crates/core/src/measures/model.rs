use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Alphabet symbols are stored as `u8`, so alphabets hold at most 256 letters.
pub type Symbol = u8;

pub const MAX_ALPHABET: usize = 256;

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARITY_TOL: f64 = 1e-10;

/// A finite alphabet `{0, .., size - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if !(2..=MAX_ALPHABET).contains(&size) {
            return Err(Error::InvalidModel(format!(
                "alphabet size must be in 2..={MAX_ALPHABET}, got {size}"
            )));
        }
        Ok(Self(size))
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0
    }

    #[inline]
    pub fn contains(self, symbol: Symbol) -> bool {
        (symbol as usize) < self.0
    }

    pub fn check_word(self, word: &[Symbol]) -> Result<()> {
        match word.iter().find(|&&s| !self.contains(s)) {
            Some(&symbol) => Err(Error::InvalidSymbol {
                symbol,
                alphabet_size: self.0,
            }),
            None => Ok(()),
        }
    }
}

/// Dense row-major matrix whose rows are meant to be probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StochasticMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidModel("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidModel("ragged matrix rows".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite matrix entry".into()));
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += w * m;
            }
        }
        out
    }

    fn max_row_sum_error(&self) -> f64 {
        (0..self.rows)
            .map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iid {
    pub(crate) p: Vec<f64>,
    pub(crate) log_p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Markov {
    pub(crate) transition: StochasticMatrix,
    pub(crate) initial: Vec<f64>,
    pub(crate) log_transition: Vec<f64>,
    pub(crate) log_initial: Vec<f64>,
}

impl Markov {
    #[inline]
    pub(crate) fn log_step(&self, from: Symbol, to: Symbol) -> f64 {
        self.log_transition[from as usize * self.transition.cols() + to as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenMarkov {
    pub(crate) transition: StochasticMatrix,
    pub(crate) initial: Vec<f64>,
    pub(crate) emission: StochasticMatrix,
}

impl HiddenMarkov {
    #[inline]
    pub fn hidden_states(&self) -> usize {
        self.transition.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub(crate) weight: f64,
    pub(crate) components: Box<[ProcessModel; 2]>,
}

impl Mixture {
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn components(&self) -> &[ProcessModel; 2] {
        &self.components
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Iid(Iid),
    Markov(Markov),
    HiddenMarkov(HiddenMarkov),
    Mixture(Mixture),
}

/// A stationary source over a finite alphabet.
///
/// Constructors only check shapes; numeric invariants (row sums, stationarity)
/// are reported by [`ProcessModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    id: String,
    alphabet: Alphabet,
    source: Source,
}

impl ProcessModel {
    pub fn iid(p: Vec<f64>) -> Result<Self> {
        let alphabet = Alphabet::new(p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite probability".into()));
        }
        let log_p = p.iter().map(|&q| crate::numeric::ln_or_neg_inf(q)).collect();
        Ok(Self {
            id: "iid".into(),
            alphabet,
            source: Source::Iid(Iid { p, log_p }),
        })
    }

    pub fn markov(transition: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        let transition = StochasticMatrix::from_rows(transition)?;
        let alphabet = Alphabet::new(transition.cols())?;
        if transition.rows() != alphabet.size() || initial.len() != alphabet.size() {
            return Err(Error::InvalidModel(
                "markov transition must be |A|x|A| and initial of length |A|".into(),
            ));
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite initial probability".into()));
        }
        let log_transition = transition
            .data
            .iter()
            .map(|&q| crate::numeric::ln_or_neg_inf(q))
            .collect();
        let log_initial = initial
            .iter()
            .map(|&q| crate::numeric::ln_or_neg_inf(q))
            .collect();
        Ok(Self {
            id: "markov".into(),
            alphabet,
            source: Source::Markov(Markov {
                transition,
                initial,
                log_transition,
                log_initial,
            }),
        })
    }

    pub fn hidden_markov(
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
        emission: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let transition = StochasticMatrix::from_rows(transition)?;
        let emission = StochasticMatrix::from_rows(emission)?;
        let states = transition.rows();
        if transition.cols() != states || initial.len() != states || emission.rows() != states
        {
            return Err(Error::InvalidModel(
                "hidden transition must be SxS, initial of length S, emission Sx|A|".into(),
            ));
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite initial probability".into()));
        }
        let alphabet = Alphabet::new(emission.cols())?;
        Ok(Self {
            id: "hidden_markov".into(),
            alphabet,
            source: Source::HiddenMarkov(HiddenMarkov {
                transition,
                initial,
                emission,
            }),
        })
    }

    pub fn mixture(weight: f64, first: ProcessModel, second: ProcessModel) -> Result<Self> {
        if first.alphabet != second.alphabet {
            return Err(Error::InvalidModel(
                "mixture components must share an alphabet".into(),
            ));
        }
        if !weight.is_finite() {
            return Err(Error::InvalidModel("non-finite mixture weight".into()));
        }
        Ok(Self {
            id: "mixture".into(),
            alphabet: first.alphabet,
            source: Source::Mixture(Mixture {
                weight,
                components: Box::new([first, second]),
            }),
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn variant_name(&self) -> &'static str {
        match self.source {
            Source::Iid(_) => "iid",
            Source::Markov(_) => "markov",
            Source::HiddenMarkov(_) => "hidden_markov",
            Source::Mixture(_) => "mixture",
        }
    }

    pub fn is_ergodic_family(&self) -> bool {
        !matches!(self.source, Source::Mixture(_))
    }

    /// Same hidden chain and emissions, started from hidden state `state`.
    /// The result is not stationary and is only used for conditional entropies.
    pub(crate) fn hmm_started_in(&self, state: usize) -> Option<ProcessModel> {
        let Source::HiddenMarkov(h) = &self.source else {
            return None;
        };
        let mut initial = vec![0.0; h.hidden_states()];
        initial[state] = 1.0;
        Some(Self {
            id: format!("{}|s1={state}", self.id),
            alphabet: self.alphabet,
            source: Source::HiddenMarkov(HiddenMarkov {
                transition: h.transition.clone(),
                initial,
                emission: h.emission.clone(),
            }),
        })
    }

    /// Checks every numeric invariant and reports residuals; never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        self.collect_checks("", &mut checks);
        ValidationReport {
            model_id: self.id.clone(),
            checks,
        }
    }

    fn collect_checks(&self, prefix: &str, out: &mut Vec<InvariantCheck>) {
        match &self.source {
            Source::Iid(m) => {
                out.push(InvariantCheck::nonnegative(
                    format!("{prefix}p.nonnegative"),
                    m.p.iter().copied().fold(f64::INFINITY, f64::min),
                ));
                out.push(InvariantCheck::within(
                    format!("{prefix}p.sum"),
                    (m.p.iter().sum::<f64>() - 1.0).abs(),
                    ROW_SUM_TOL,
                ));
            }
            Source::Markov(m) => {
                push_matrix_checks(prefix, "transition", &m.transition, out);
                push_vector_checks(prefix, "initial", &m.initial, out);
                out.push(InvariantCheck::within(
                    format!("{prefix}stationarity"),
                    stationarity_residual(&m.transition, &m.initial),
                    STATIONARITY_TOL,
                ));
            }
            Source::HiddenMarkov(m) => {
                push_matrix_checks(prefix, "transition", &m.transition, out);
                push_matrix_checks(prefix, "emission", &m.emission, out);
                push_vector_checks(prefix, "initial", &m.initial, out);
                out.push(InvariantCheck::within(
                    format!("{prefix}stationarity"),
                    stationarity_residual(&m.transition, &m.initial),
                    STATIONARITY_TOL,
                ));
            }
            Source::Mixture(m) => {
                let outside = if m.weight > 0.0 && m.weight < 1.0 {
                    0.0
                } else {
                    m.weight.abs().max((m.weight - 1.0).abs())
                };
                out.push(InvariantCheck {
                    name: format!("{prefix}weight.open_unit_interval"),
                    residual: outside,
                    tolerance: 0.0,
                    pass: m.weight > 0.0 && m.weight < 1.0,
                });
                for (i, c) in m.components.iter().enumerate() {
                    c.collect_checks(&format!("{prefix}components[{i}]."), out);
                }
            }
        }
    }
}

fn push_matrix_checks(
    prefix: &str,
    name: &str,
    m: &StochasticMatrix,
    out: &mut Vec<InvariantCheck>,
) {
    out.push(InvariantCheck::nonnegative(
        format!("{prefix}{name}.nonnegative"),
        m.min_entry(),
    ));
    out.push(InvariantCheck::within(
        format!("{prefix}{name}.row_sums"),
        m.max_row_sum_error(),
        ROW_SUM_TOL,
    ));
}

fn push_vector_checks(prefix: &str, name: &str, v: &[f64], out: &mut Vec<InvariantCheck>) {
    out.push(InvariantCheck::nonnegative(
        format!("{prefix}{name}.nonnegative"),
        v.iter().copied().fold(f64::INFINITY, f64::min),
    ));
    out.push(InvariantCheck::within(
        format!("{prefix}{name}.sum"),
        (v.iter().sum::<f64>() - 1.0).abs(),
        ROW_SUM_TOL,
    ));
}

/// `max_j |(v M)_j - v_j|`.
pub fn stationarity_residual(m: &StochasticMatrix, v: &[f64]) -> f64 {
    m.left_mul(v)
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Stationary distribution of a stochastic matrix by power iteration on the
/// lazy chain `(I + M) / 2`, which has the same fixed points and no periodicity.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = StochasticMatrix::from_rows(transition.to_vec())?;
    if m.rows() != m.cols() {
        return Err(Error::InvalidModel("transition matrix must be square".into()));
    }
    let n = m.rows();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let step = m.left_mul(&v);
        let next: Vec<f64> = v.iter().zip(&step).map(|(a, b)| 0.5 * (a + b)).collect();
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|x| x / total).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < 1e-14 && stationarity_residual(&m, &v) < 1e-14 {
            return Ok(v);
        }
    }
    Err(Error::InvalidModel(
        "power iteration did not reach 1e-14".into(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl InvariantCheck {
    fn within(name: String, residual: f64, tolerance: f64) -> Self {
        Self {
            name,
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    fn nonnegative(name: String, min_entry: f64) -> Self {
        Self {
            name,
            residual: (-min_entry).max(0.0),
            tolerance: 0.0,
            pass: min_entry >= 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub model_id: String,
    pub checks: Vec<InvariantCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        Err(Error::InvalidModel(self.to_string()))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model {}:", self.model_id)?;
        for c in self.failures() {
            write!(f, " {} (residual {:.3e} > {:.1e})", c.name, c.residual, c.tolerance)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m1_validates() {
        let m = ProcessModel::markov(vec![vec![0.7, 0.3], vec![0.2, 0.8]], vec![0.4, 0.6]).unwrap();
        let report = m.validate();
        assert!(report.passed(), "{report}");
        assert!(report.check("stationarity").unwrap().residual < 1e-15);
    }

    #[test]
    fn nonstationary_initial_reports_residual() {
        let m = ProcessModel::markov(vec![vec![0.7, 0.3], vec![0.2, 0.8]], vec![0.5, 0.5]).unwrap();
        let report = m.validate();
        assert!(!report.passed());
        let s = report.check("stationarity").unwrap();
        assert!(!s.pass);
        assert!((s.residual - 0.05).abs() < 1e-15);
    }

    #[test]
    fn uniform_iid_validates() {
        assert!(ProcessModel::iid(vec![0.5, 0.5]).unwrap().validate().passed());
    }

    #[test]
    fn row_sum_fault_is_reported() {
        let m = ProcessModel::markov(vec![vec![0.71, 0.3], vec![0.2, 0.8]], vec![0.4, 0.6]).unwrap();
        let report = m.validate();
        assert!(!report.check("transition.row_sums").unwrap().pass);
    }

    #[test]
    fn shape_errors() {
        assert!(ProcessModel::iid(vec![1.0]).is_err());
        assert!(ProcessModel::markov(vec![vec![1.0, 0.0]], vec![1.0, 0.0]).is_err());
        assert!(ProcessModel::hidden_markov(
            vec![vec![1.0]],
            vec![1.0],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]]
        )
        .is_err());
        let a = ProcessModel::iid(vec![0.5, 0.5]).unwrap();
        let b = ProcessModel::iid(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(ProcessModel::mixture(0.5, a, b).is_err());
    }

    #[test]
    fn mixture_weight_must_be_interior() {
        let a = ProcessModel::iid(vec![0.5, 0.5]).unwrap();
        let m = ProcessModel::mixture(1.0, a.clone(), a).unwrap();
        assert!(!m.validate().passed());
    }

    #[test]
    fn power_iteration_solves_m1() {
        let pi = stationary_distribution(&[vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        assert!((pi[0] - 0.4).abs() < 1e-13);
        assert!((pi[1] - 0.6).abs() < 1e-13);
        // periodic chain still converges thanks to the lazy step
        let pi = stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-13);
    }
}
