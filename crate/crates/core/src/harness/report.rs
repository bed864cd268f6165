use serde::{Deserialize, Serialize};

use super::{AdaptiveReport, CeBenchReport, ComplexityReport, DpBenchReport, MaintReport, VerifyOracleReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

/// A serializable experiment result with a tabular view and threshold checks.
pub trait Report: Serialize {
    /// Human-readable descriptions of failed acceptance thresholds.
    fn violations(&self) -> Vec<String>;
    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>);

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let (header, rows) = self.table();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&header).expect("in-memory write");
                for r in rows {
                    w.write_record(&r).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
            }
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl Report for MaintReport {
    fn violations(&self) -> Vec<String> {
        MaintReport::violations(self)
    }

    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .steps
            .iter()
            .map(|s| {
                vec![
                    s.t.to_string(),
                    serde_json::to_value(s.kind).expect("enum").as_str().unwrap_or_default().to_string(),
                    s.woodbury_rank.to_string(),
                    format!("{:e}", s.spectral_dev),
                    opt(s.m_rel_err),
                    opt(s.query_rel_err),
                ]
            })
            .collect();
        (vec!["t", "kind", "woodbury_rank", "spectral_dev", "m_rel_err", "query_rel_err"], rows)
    }
}

impl Report for AdaptiveReport {
    fn violations(&self) -> Vec<String> {
        AdaptiveReport::violations(self)
    }

    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.run.to_string(),
                    r.t.to_string(),
                    r.query_set.as_ref().map(|q| q.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(";")).unwrap_or_default(),
                    join(&r.u),
                    r.truth.as_deref().map(join).unwrap_or_default(),
                    r.bound.as_deref().map(join).unwrap_or_default(),
                    r.ok.map(|b| b.to_string()).unwrap_or_default(),
                    r.sampled.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(";"),
                    join(&r.rank_slack),
                ]
            })
            .collect();
        (vec!["run", "t", "query_set", "u", "truth", "bound", "ok", "sampled", "rank_slack"], rows)
    }
}

impl Report for CeBenchReport {
    fn violations(&self) -> Vec<String> {
        CeBenchReport::violations(self)
    }

    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .reports
            .iter()
            .map(|r| {
                vec![
                    r.family.name().to_string(),
                    r.b.to_string(),
                    r.n.to_string(),
                    r.trials.to_string(),
                    format!("{:e}", r.mean_bias),
                    format!("{:e}", r.std_error),
                    format!("{:e}", r.alpha_hat),
                    format!("{:e}", r.beta_hat),
                ]
            })
            .collect();
        (vec!["family", "b", "n", "trials", "mean_bias", "std_error", "alpha_hat", "beta_hat"], rows)
    }
}

impl Report for DpBenchReport {
    fn violations(&self) -> Vec<String> {
        DpBenchReport::violations(self)
    }

    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .batteries
            .iter()
            .map(|b| {
                vec![
                    serde_json::to_value(b.distribution).expect("enum").as_str().unwrap_or_default().to_string(),
                    b.trials.to_string(),
                    format!("{:e}", b.gamma),
                    b.within_gamma.to_string(),
                    format!("{:e}", b.fraction),
                    format!("{:e}", b.max_rank_error),
                ]
            })
            .collect();
        (vec!["distribution", "trials", "gamma", "within_gamma", "fraction", "max_rank_error"], rows)
    }
}

impl Report for ComplexityReport {
    fn violations(&self) -> Vec<String> {
        Vec::new()
    }

    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .weights
            .iter()
            .map(|(i, g)| vec![i.to_string(), format!("{g:e}"), format!("{:e}", self.f_ac)])
            .collect();
        (vec!["i", "g_i", "f_ac"], rows)
    }
}

impl Report for VerifyOracleReport {
    fn violations(&self) -> Vec<String> {
        VerifyOracleReport::violations(self)
    }

    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .checks
            .iter()
            .map(|c| {
                vec![
                    c.name.clone(),
                    c.instances.to_string(),
                    format!("{:e}", c.max_error),
                    format!("{:e}", c.tolerance),
                    c.pass.to_string(),
                ]
            })
            .collect();
        (vec!["check", "instances", "max_error", "tolerance", "pass"], rows)
    }
}
