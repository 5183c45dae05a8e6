//! Tabular results and their CSV form.

use kyle_hft::{expected_profits, EquilibriumSolution, MarketParams};

use crate::{CliError, Result};

pub const PARAM_COLUMNS: [&str; 6] = ["theta_1plus", "theta_2", "theta_eps", "j1", "j2", "gamma"];
pub const COEFFICIENT_COLUMNS: [&str; 13] = [
    "a1",
    "theta_z",
    "a21",
    "alpha22",
    "beta11",
    "beta21",
    "beta22",
    "beta23",
    "beta12",
    "lambda1",
    "lambda1plus",
    "lambda21",
    "lambda22",
];
pub const PROFIT_COLUMNS: [&str; 3] = ["it_profit", "hft_profit_small", "hft_profit_rt"];
pub const FIT_COLUMNS: [&str; 2] = ["residual_norm", "multiplicity_flag"];

/// Header plus string cells; every row has one cell per column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Table {
        Table { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Usage(format!("no column {name:?}; available: {}", self.columns.join(", "))))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(text.as_bytes());
        let mut records = r.records();
        let bad = |e: csv::Error| CliError::Usage(format!("malformed CSV: {e}"));
        let columns: Vec<String> = match records.next() {
            Some(h) => h.map_err(bad)?.iter().map(str::to_string).collect(),
            None => return Err(CliError::Usage("CSV has no header".into())),
        };
        let mut t = Table { columns, rows: Vec::new() };
        for rec in records {
            t.rows.push(rec.map_err(bad)?.iter().map(str::to_string).collect());
        }
        Ok(t)
    }
}

/// Shortest decimal that parses back to `x`; exponent form outside
/// `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn param_cells(p: &MarketParams) -> Vec<String> {
    vec![
        num(p.theta_1plus),
        num(p.theta_2),
        num(p.theta_eps),
        p.j1.to_string(),
        p.j2.to_string(),
        opt(p.gamma),
    ]
}

/// Which output groups a row carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub coefficients: bool,
    pub regime: bool,
    pub profits: bool,
}

impl Outputs {
    pub const ALL: Outputs = Outputs { coefficients: true, regime: true, profits: true };

    pub fn columns(&self) -> Vec<&'static str> {
        let mut c = Vec::new();
        if self.coefficients {
            c.extend(COEFFICIENT_COLUMNS);
        }
        if self.regime {
            c.push("regime");
        }
        if self.profits {
            c.extend(PROFIT_COLUMNS);
        }
        if self.regime {
            c.extend(FIT_COLUMNS);
        }
        c
    }

    /// Output cells of one solution. Only `regime` is filled when there is
    /// no equilibrium.
    pub fn cells(&self, sol: &EquilibriumSolution) -> Vec<String> {
        let ok = sol.is_equilibrium();
        let mut c = Vec::new();
        if self.coefficients {
            let pr = &sol.pricing;
            let v = sol.coefficients().into_iter().chain([pr.lambda1, pr.lambda1plus, pr.lambda21, pr.lambda22]);
            c.extend(v.map(|x| if ok { num(x) } else { String::new() }));
        }
        if self.regime {
            c.push(sol.regime.to_string());
        }
        if self.profits {
            match expected_profits(sol).ok().filter(|_| ok) {
                Some(r) => c.extend([num(r.it_profit), opt(r.hft_profit_small), opt(r.hft_profit_rt)]),
                None => c.extend([String::new(), String::new(), String::new()]),
            }
        }
        if self.regime {
            if ok {
                c.extend([num(sol.residual_norm), sol.multiplicity_flag.to_string()]);
            } else {
                c.extend([String::new(), String::new()]);
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-7, 2.5e20, -0.75, 0.0, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_round_trip_quotes_commas() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x,y".into(), String::new()]);
        let text = t.to_csv().unwrap();
        assert!(text.contains("\"x,y\""));
        assert_eq!(Table::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn default_header_order() {
        let mut h: Vec<&str> = PARAM_COLUMNS.to_vec();
        h.extend(Outputs::ALL.columns());
        assert_eq!(h[6..].join(","), "a1,theta_z,a21,alpha22,beta11,beta21,beta22,beta23,beta12,lambda1,lambda1plus,lambda21,lambda22,regime,it_profit,hft_profit_small,hft_profit_rt,residual_norm,multiplicity_flag");
    }
}
