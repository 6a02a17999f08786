use serde::Serialize;

use super::Method;

/// A number with the method that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tagged {
    pub value: f64,
    pub method: Method,
}

impl Tagged {
    pub fn new(value: f64, method: Method) -> Self {
        Tagged { value, method }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportBounds {
    pub paper_classical_ub: Option<Tagged>,
    pub paper_quantum_lb: Option<Tagged>,
}

/// Classical and quantum values of one functional, side by side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport {
    pub functional: String,
    pub classical: Tagged,
    pub quantum: Tagged,
    /// quantum / classical, `None` when the classical value vanishes.
    pub ratio: Option<f64>,
    /// quantum / paper_classical_ub: a certified lower bound on LV(M).
    pub certified_ratio_lb: Option<f64>,
    pub bounds: ReportBounds,
    pub notes: Vec<String>,
}

const ZERO_TOL: f64 = 1e-15;

impl ViolationReport {
    pub fn new(functional: impl Into<String>, classical: Tagged, quantum: Tagged, bounds: ReportBounds) -> Self {
        let mut notes = Vec::new();
        let ratio = if classical.value.abs() > ZERO_TOL {
            Some(quantum.value / classical.value)
        } else {
            notes.push("classical value is zero; ratio undefined".to_string());
            None
        };
        if classical.method == Method::HeuristicLb {
            notes.push("classical value is a heuristic lower bound, so ratio may overstate LV(M)".to_string());
        }
        let certified_ratio_lb = bounds
            .paper_classical_ub
            .filter(|b| b.value > ZERO_TOL)
            .map(|b| quantum.value / b.value);
        ViolationReport { functional: functional.into(), classical, quantum, ratio, certified_ratio_lb, bounds, notes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_and_json_shape() {
        let r = ViolationReport::new(
            "kv",
            Tagged::new(0.5, Method::Exact),
            Tagged::new(0.75, Method::ClosedFormValidated),
            ReportBounds { paper_classical_ub: Some(Tagged::new(0.6, Method::FormulaUb)), paper_quantum_lb: None },
        );
        assert_eq!(r.ratio, Some(1.5));
        assert!((r.certified_ratio_lb.unwrap() - 1.25).abs() < 1e-15);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["classical"]["method"], "exact");
        assert_eq!(v["quantum"]["method"], "closed-form-validated");
        assert_eq!(v["bounds"]["paper_classical_ub"]["method"], "formula-ub");
        assert!(v["bounds"]["paper_quantum_lb"].is_null());
    }

    #[test]
    fn zero_classical_value() {
        let r = ViolationReport::new(
            "zero",
            Tagged::new(0.0, Method::Exact),
            Tagged::new(0.0, Method::HeuristicLb),
            ReportBounds::default(),
        );
        assert_eq!(r.ratio, None);
        assert_eq!(r.notes.len(), 1);
    }
}
