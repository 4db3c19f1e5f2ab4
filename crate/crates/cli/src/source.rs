//! Turning family flags into states and escalation sources.

use clap::{Args, ValueEnum};
use finent_core::escalate::{AnalyticFamily, StateProvider};
use finent_core::states::{
    chik_truncated, gen_isotropic, gen_separable_random, ghz_truncated, partial_ent_truncated, tmsv_truncated,
    QState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Chik,
    Tmsv,
    Isotropic,
    PartialEnt,
    Ghz,
    SeparableRandom,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Excitation index of |chi_k>.
    #[arg(long)]
    pub k: Option<usize>,
    /// TMSV squeezing parameter in [0, 1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Isotropic mixing weight in [0, 1].
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of GHZ modes.
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
    /// Number of product terms for separable-random.
    #[arg(long, default_value_t = 4)]
    pub terms: usize,
    /// Local dimension used for every mode.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Per-mode dimensions, e.g. 3,3.
    #[arg(long, value_delimiter = ',', conflicts_with = "dim")]
    pub dims: Option<Vec<usize>>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, family: Family) -> Result<T, String> {
    v.ok_or_else(|| format!("--{flag} is required for family {}", family_name(family)))
}

pub fn family_name(f: Family) -> &'static str {
    match f {
        Family::Chik => "chik",
        Family::Tmsv => "tmsv",
        Family::Isotropic => "isotropic",
        Family::PartialEnt => "partial-ent",
        Family::Ghz => "ghz",
        Family::SeparableRandom => "separable-random",
    }
}

impl FamilyArgs {
    pub fn family(&self) -> Result<Family, String> {
        self.family.ok_or_else(|| "--family is required".to_string())
    }

    pub fn num_modes(&self) -> Result<usize, String> {
        Ok(match self.family()? {
            Family::PartialEnt => 3,
            Family::Ghz => self.modes,
            Family::SeparableRandom => self.dims.as_ref().map_or(2, Vec::len),
            _ => 2,
        })
    }

    /// Explicit dimensions from `--dims`, or `--dim` repeated per mode.
    pub fn dims(&self) -> Result<Vec<usize>, String> {
        let modes = self.num_modes()?;
        let dims = match (&self.dims, self.dim) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => vec![d; modes],
            (None, None) => return Err("--dim or --dims is required".into()),
        };
        if dims.len() != modes {
            return Err(format!("family {} has {modes} modes but {} dimensions were given", family_name(self.family()?), dims.len()));
        }
        Ok(dims)
    }

    /// Echo of the family parameters for reports.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let Some(family) = self.family else { return out };
        out.push(("family", family_name(family).to_string()));
        match family {
            Family::Chik => out.extend(self.k.map(|k| ("k", k.to_string()))),
            Family::Tmsv => out.extend(self.lambda.map(|l| ("lambda", crate::report::num(l)))),
            Family::Isotropic => out.extend(self.p.map(|p| ("p", crate::report::num(p)))),
            Family::Ghz => out.push(("modes", self.modes.to_string())),
            Family::SeparableRandom => out.push(("terms", self.terms.to_string())),
            Family::PartialEnt => {}
        }
        out
    }

    /// The state at fixed dimensions, as written by `gen`.
    pub fn state(&self, seed: u64) -> Result<QState, String> {
        let family = self.family()?;
        let dims = self.dims()?;
        let e = |e: finent_core::Error| e.to_string();
        Ok(match family {
            Family::Chik => {
                let k = need(self.k, "k", family)?;
                if k == 0 {
                    return Err("--k must be positive".into());
                }
                if dims.iter().any(|&d| d <= k) {
                    return Err(format!("|chi_{k}> is not representable in dims {dims:?}: every dimension must exceed {k}"));
                }
                QState::Pure(chik_truncated(k, &dims).map_err(e)?)
            }
            Family::Tmsv => {
                QState::Density(tmsv_truncated(need(self.lambda, "lambda", family)?, &dims).map_err(e)?.projector())
            }
            Family::Isotropic => {
                if dims[0] != dims[1] {
                    return Err("isotropic states need equal local dimensions".into());
                }
                QState::Density(gen_isotropic(need(self.p, "p", family)?, dims[0]).map_err(e)?)
            }
            Family::PartialEnt => {
                if dims.iter().any(|&d| d < 2) {
                    return Err("the partially entangled state needs local dimension at least 2".into());
                }
                QState::Pure(partial_ent_truncated(&dims).map_err(e)?)
            }
            Family::Ghz => {
                if self.modes < 2 || dims.iter().any(|&d| d < 2) {
                    return Err("GHZ needs at least 2 modes of dimension at least 2".into());
                }
                QState::Pure(ghz_truncated(&dims).map_err(e)?)
            }
            Family::SeparableRandom => {
                QState::Density(gen_separable_random(self.terms, &dims, seed).map_err(e)?.assemble())
            }
        })
    }

    /// Escalation source. Analytic families are truncated on demand; the
    /// isotropic state is finite and built at `--dim`.
    pub fn provider(&self, seed: u64) -> Result<StateProvider, String> {
        let family = self.family()?;
        let e = |e: finent_core::Error| e.to_string();
        let analytic = match family {
            Family::Chik => {
                let k = need(self.k, "k", family)?;
                if k == 0 {
                    return Err("--k must be positive".into());
                }
                AnalyticFamily::Chik { k }
            }
            Family::Tmsv => {
                let lambda = need(self.lambda, "lambda", family)?;
                if !(0.0..1.0).contains(&lambda) {
                    return Err(format!("--lambda must lie in [0, 1), got {lambda}"));
                }
                AnalyticFamily::Tmsv { lambda }
            }
            Family::PartialEnt => AnalyticFamily::PartialEnt,
            Family::Ghz => {
                if self.modes < 2 {
                    return Err("GHZ needs at least 2 modes".into());
                }
                AnalyticFamily::Ghz { modes: self.modes }
            }
            Family::SeparableRandom => {
                AnalyticFamily::Separable(gen_separable_random(self.terms, &self.dims()?, seed).map_err(e)?)
            }
            Family::Isotropic => {
                let QState::Density(rho) = self.state(seed)? else { unreachable!() };
                return Ok(StateProvider::Finite(rho));
            }
        };
        Ok(StateProvider::Family(analytic))
    }
}
