use crate::error::{Error, Result};

/// Words in the fixed part of a table dump: seven header words plus the
/// heavy and patch section counts. Budgets cover everything else.
pub const FIXED_WORDS: u64 = 9;

/// Which tradeoff curve a plan follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `S^2 T ~ M^2`, balanced Hellman tables, no side table.
    RandomFunction,
    /// `S^3 T ~ M^3`, many short tables plus an explicit side table for
    /// heavy images, suitable for functions with skewed preimage counts.
    WorstCase,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::RandomFunction => "random",
            Mode::WorstCase => "worst",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random-function" => Ok(Mode::RandomFunction),
            "worst" | "worst-case" => Ok(Mode::WorstCase),
            _ => Err(Error::Parameter(format!("unknown inversion mode {s:?}"))),
        }
    }
}

/// Chain-table geometry.
///
/// `r == 0` denotes the degenerate full inverse table, in which case the
/// side table holds every image and `ell` equals the domain size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HellmanParams {
    /// Chains per table.
    pub m: u64,
    /// Chain length.
    pub t: u64,
    /// Number of tables, each with its own flavor.
    pub r: u64,
    /// Capacity of the explicit side table, in entries.
    pub ell: u64,
    pub mode: Mode,
}

impl HellmanParams {
    pub fn is_full_table(&self) -> bool {
        self.r == 0
    }

    /// Upper bound on the words a build with these parameters occupies,
    /// fixed part included.
    pub fn max_words(&self) -> u64 {
        FIXED_WORDS + self.r + 2 * self.m * self.r + 2 * self.ell
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plan {
    pub params: HellmanParams,
    pub predicted_words: u64,
    /// Predicted worst-case probes for one inversion, counting one probe
    /// per function evaluation.
    pub predicted_probes: u64,
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// Smallest budget accepted for a domain of size `m`, `ceil(4 sqrt(M))`.
pub fn budget_floor(domain: u64) -> u64 {
    (4.0 * (domain as f64).sqrt()).ceil() as u64
}

/// Choose table geometry for a domain of `domain` points within
/// `budget_words` words.
pub fn plan_parameters(domain: u64, budget_words: u64, mode: Mode) -> Result<Plan> {
    if domain == 0 {
        return Err(Error::Parameter("empty domain".into()));
    }
    let floor = budget_floor(domain);
    if budget_words < floor {
        return Err(Error::Infeasible(format!(
            "budget of {budget_words} words is below the floor {floor} for a domain of {domain}"
        )));
    }

    // Every image of a full inverse table costs two words.
    if budget_words >= 2 * domain {
        let params = HellmanParams {
            m: 0,
            t: 0,
            r: 0,
            ell: domain,
            mode,
        };
        return Ok(Plan {
            params,
            predicted_words: params.max_words(),
            predicted_probes: 2 * (ceil_log2(domain + 1) + 1) + 1,
        });
    }

    let ell = match mode {
        Mode::RandomFunction => 0,
        Mode::WorstCase => budget_words.div_ceil(16),
    };
    let avail = budget_words - 2 * ell;
    let chains = (avail / 2).max(1);

    let (t, r_wanted) = match mode {
        // m t^2 = M and r = t with m r chains: t = M / (m r).
        Mode::RandomFunction => {
            let t = domain.div_ceil(chains).max(1);
            (t, t)
        }
        // Covering each point twice over: m t r = 2M with r = t^2.
        Mode::WorstCase => {
            let t = (2 * domain).div_ceil(chains).max(1);
            (t, t.saturating_mul(t))
        }
    };
    let (m, r) = fit_tables(avail, r_wanted);
    let params = HellmanParams { m, t, r, ell, mode };

    let per_step = 1 + ceil_log2(m + 1) + if ell > 0 { ceil_log2(ell + 1) } else { 0 };
    let side = if ell > 0 { 2 * (ceil_log2(ell + 1) + 1) } else { 0 };
    let predicted_probes = r * t * per_step + side + 1;
    let predicted_words = params.max_words();
    debug_assert!(predicted_words <= budget_words + FIXED_WORDS);
    Ok(Plan {
        params,
        predicted_words,
        predicted_probes,
    })
}

/// Split `avail` words into `r` tables of `m` chains, with one count word
/// per table, preferring `r_wanted` tables.
fn fit_tables(avail: u64, r_wanted: u64) -> (u64, u64) {
    let r = r_wanted.max(1);
    if avail > r && (avail - r) / (2 * r) >= 1 {
        ((avail - r) / (2 * r), r)
    } else {
        (1, (avail / 3).max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_function_point() {
        let m = 1u64 << 16;
        let plan = plan_parameters(m, 1 << 12, Mode::RandomFunction).unwrap();
        let p = plan.params;
        assert!(plan.predicted_words <= (1 << 12) + FIXED_WORDS);
        assert_eq!(p.ell, 0);
        assert_eq!(p.r, p.t);
        // m r t covers the domain and m t^2 ~ M, within rounding
        let coverage = p.m * p.r * p.t;
        assert!(coverage as f64 >= 0.8 * m as f64 && coverage as f64 <= 1.2 * m as f64);
        let mt2 = (p.m * p.t * p.t) as f64;
        assert!(mt2 >= 0.8 * m as f64 && mt2 <= 1.2 * m as f64, "{p:?}");
        assert!(2 * p.m * p.r as u64 + p.r <= 1 << 12);
        assert!(plan.predicted_probes >= p.r * p.t);
    }

    #[test]
    fn worst_case_curve() {
        let m = 1u64 << 20;
        let small = plan_parameters(m, 1 << 17, Mode::WorstCase).unwrap();
        let large = plan_parameters(m, 1 << 18, Mode::WorstCase).unwrap();
        assert_eq!(small.params.ell, (1 << 17) / 16);
        assert!(small.predicted_words <= (1 << 17) + FIXED_WORDS);
        assert_eq!(small.params.r, small.params.t * small.params.t);
        // doubling space cuts time by roughly 2^3
        let ratio = (small.params.r * small.params.t) as f64 / (large.params.r * large.params.t) as f64;
        assert!((4.0..=16.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn degenerate_and_infeasible() {
        let m = 1u64 << 12;
        for mode in [Mode::RandomFunction, Mode::WorstCase] {
            let plan = plan_parameters(m, 2 * m, mode).unwrap();
            assert!(plan.params.is_full_table());
            assert_eq!(plan.params.ell, m);
            assert!(plan.predicted_probes < 40);
        }
        assert!(matches!(
            plan_parameters(1 << 16, 16, Mode::WorstCase),
            Err(Error::Infeasible(_))
        ));
        assert!(plan_parameters(1 << 16, 1024, Mode::RandomFunction).is_ok());
        assert!(plan_parameters(1 << 16, 1023, Mode::RandomFunction).is_err());
    }

    #[test]
    fn tiny_budgets_fall_back_to_single_chain_tables() {
        let plan = plan_parameters(1 << 10, 128, Mode::WorstCase).unwrap();
        assert_eq!(plan.params.m, 1);
        assert!(plan.predicted_words <= 128 + FIXED_WORDS);
    }
}
