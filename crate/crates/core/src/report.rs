use std::io::Write;

use crate::error::Result;

/// How an iterative run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    MaxIter,
    Blowup,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::MaxIter => "max_iter",
            Outcome::Blowup => "blowup",
        }
    }

    pub fn is_converged(self) -> bool {
        self == Outcome::Converged
    }
}

/// Per-iteration history of a fixed-point, flow or descent run.
///
/// `ratio_history[k]` is `residual[k] / residual[k − 1]`; it is `None` for
/// the first step and whenever the previous residual is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub iterates: usize,
    pub residual_history: Vec<f64>,
    pub ratio_history: Vec<Option<f64>>,
    pub outcome: Outcome,
}

impl ConvergenceReport {
    pub fn new() -> Self {
        Self {
            iterates: 0,
            residual_history: Vec::new(),
            ratio_history: Vec::new(),
            outcome: Outcome::MaxIter,
        }
    }

    pub fn push(&mut self, residual: f64) {
        let ratio = match self.residual_history.last() {
            Some(&prev) if prev > 0.0 && residual.is_finite() => Some(residual / prev),
            _ => None,
        };
        self.residual_history.push(residual);
        self.ratio_history.push(ratio);
        self.iterates += 1;
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }

    /// CSV with header `iter,residual,ratio`; undefined ratios are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,residual,ratio")?;
        for (k, (r, q)) in self.residual_history.iter().zip(&self.ratio_history).enumerate() {
            match q {
                Some(q) => writeln!(w, "{},{},{}", k + 1, r, q)?,
                None => writeln!(w, "{},{},", k + 1, r)?,
            }
        }
        Ok(())
    }
}

impl Default for ConvergenceReport {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_and_csv() {
        let mut r = ConvergenceReport::new();
        r.push(1.0);
        r.push(0.25);
        r.push(0.0);
        r.push(0.0);
        assert_eq!(r.iterates, 4);
        assert_eq!(r.ratio_history, vec![None, Some(0.25), Some(0.0), None]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "iter,residual,ratio\n1,1,\n2,0.25,0.25\n3,0,0\n4,0,\n");
    }
}
