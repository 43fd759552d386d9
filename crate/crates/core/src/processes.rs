//! Shift-invariant processes given by their finite marginals.
//!
//! A process answers `marginal(F)` with a measure whose site `j` is the
//! coordinate at the `j`-th element of `F`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::group::{CosetDecomposition, GroupKind, GroupPresentation, GroupWord};
use crate::measures::{Block, BlockLaw, BlockProductMeasure, MarkovChain, Measure};

/// Consistent finite-dimensional marginals of a process on `A^G`.
pub trait ProcessOracle: Send + Sync {
    fn alphabet(&self) -> usize;
    fn presentation(&self) -> &GroupPresentation;
    /// Law of `(x_f)_{f in window}`, with site `j` for `window[j]`.
    fn marginal(&self, window: &[GroupWord]) -> Result<Measure>;
}

/// The processes this crate can evaluate exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum Process {
    /// i.i.d. coordinates with law `eta`.
    Bernoulli {
        eta: Vec<f64>,
        presentation: GroupPresentation,
    },
    /// Stationary Markov chain indexed by the integers.
    Markov { chain: Arc<MarkovChain> },
    /// Independent copies of a process on `<h>` placed along the right cosets of `<h>`.
    Coinduced {
        base: Box<Process>,
        h: GroupWord,
        presentation: GroupPresentation,
    },
}

fn integer_positions(window: &[GroupWord]) -> Result<Vec<i64>> {
    window
        .iter()
        .map(|g| match g {
            GroupWord::Abelian(v) if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::ForeignWord {
                word: g.to_string(),
                reason: "expected an element of the integers".into(),
            }),
        })
        .collect()
}

impl Process {
    pub fn bernoulli(eta: Vec<f64>, presentation: GroupPresentation) -> Result<Self> {
        // validated through the product constructor
        BlockProductMeasure::iid(&eta, vec![0])?;
        Ok(Process::Bernoulli { eta, presentation })
    }

    /// `stationary` must satisfy `stationary P = stationary` within `1e-12`.
    pub fn markov(transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let chain = MarkovChain::new(stationary, transition).map_err(|e| Error::InvalidProcess(e.to_string()))?;
        if !chain.is_stationary() {
            return Err(Error::InvalidProcess("the initial law is not stationary for the transition matrix".into()));
        }
        Ok(Process::Markov { chain: Arc::new(chain) })
    }

    /// Symmetric two-state chain that switches state with probability `flip`.
    pub fn symmetric_flip(flip: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip) {
            return Err(invalid_arg("flip", format!("{flip} is outside [0, 1]")));
        }
        Self::markov(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]], vec![0.5, 0.5])
    }

    /// Coinduces a process on the integers along `<h>`.
    pub fn coinduce(base: Process, h: GroupWord, presentation: GroupPresentation) -> Result<Self> {
        if !base.is_integer_process() {
            return Err(Error::InvalidProcess("coinduction needs a process on the integers".into()));
        }
        let h = presentation.normalize(&h)?;
        if h.is_identity() {
            return Err(Error::TorsionElement { word: h.to_string() });
        }
        Ok(Process::Coinduced {
            base: Box::new(base),
            h,
            presentation,
        })
    }

    fn is_integer_process(&self) -> bool {
        let p = self.presentation();
        p.kind() == GroupKind::FreeAbelian && p.rank() == 1
    }

    /// Law of `nu` on `{0, .., len-1}` as a single block law.
    pub fn interval_law(&self, len: usize) -> Result<Arc<BlockLaw>> {
        match self {
            // i.i.d. along a path regardless of the group
            Process::Bernoulli { eta, .. } => {
                let chain = MarkovChain::new(eta.clone(), vec![eta.clone(); eta.len()])?;
                Ok(Arc::new(BlockLaw::markov_path(Arc::new(chain), len)))
            }
            Process::Markov { chain } => Ok(Arc::new(BlockLaw::markov_path(chain.clone(), len))),
            Process::Coinduced { .. } => Err(Error::InvalidProcess("interval laws need a process on the integers".into())),
        }
    }

    /// Marginal on the enlarged window of the coset decomposition, with site
    /// `j` for `decomposition.enlarged[j]`.
    pub fn enlarged_marginal(&self, decomposition: &CosetDecomposition) -> Result<Measure> {
        let Process::Coinduced { base, .. } = self else {
            return self.marginal(&decomposition.enlarged);
        };
        let width = decomposition.interval_len();
        let interval: Vec<GroupWord> = decomposition.exponents().map(|i| GroupWord::Abelian(vec![i])).collect();
        let piece = base.marginal(&interval)?;
        let parts = (0..decomposition.cosets())
            .map(|k| piece.relabel(|j| k * width + j))
            .collect::<Result<Vec<_>>>()?;
        Measure::product(parts)
    }

    pub fn to_config(&self) -> ProcessConfig {
        match self {
            Process::Bernoulli { eta, presentation } => ProcessConfig::Bernoulli {
                eta: eta.clone(),
                group: Some(presentation.clone()),
            },
            Process::Markov { chain } => ProcessConfig::Markov {
                transition: chain.transition_rows(),
                stationary: chain.initial().to_vec(),
            },
            Process::Coinduced { base, h, presentation } => ProcessConfig::Coinduced {
                base: Box::new(base.to_config()),
                h: h.to_string(),
                group: presentation.clone(),
            },
        }
    }

    pub fn from_config(config: &ProcessConfig) -> Result<Self> {
        match config {
            ProcessConfig::Bernoulli { eta, group } => {
                Self::bernoulli(eta.clone(), group.clone().unwrap_or_else(GroupPresentation::integers))
            }
            ProcessConfig::Markov { transition, stationary } => Self::markov(transition.clone(), stationary.clone()),
            ProcessConfig::Coinduced { base, h, group } => {
                let h = group.parse_word(h)?;
                Self::coinduce(Self::from_config(base)?, h, group.clone())
            }
        }
    }
}

impl ProcessOracle for Process {
    fn alphabet(&self) -> usize {
        match self {
            Process::Bernoulli { eta, .. } => eta.len(),
            Process::Markov { chain } => chain.alphabet(),
            Process::Coinduced { base, .. } => base.alphabet(),
        }
    }

    fn presentation(&self) -> &GroupPresentation {
        static INTEGERS: std::sync::OnceLock<GroupPresentation> = std::sync::OnceLock::new();
        match self {
            Process::Bernoulli { presentation, .. } | Process::Coinduced { presentation, .. } => presentation,
            Process::Markov { .. } => INTEGERS.get_or_init(GroupPresentation::integers),
        }
    }

    fn marginal(&self, window: &[GroupWord]) -> Result<Measure> {
        let pres = self.presentation();
        let window = window.iter().map(|g| pres.normalize(g)).collect::<Result<Vec<_>>>()?;
        let mut sorted = window.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid_arg("window", "repeated group element"));
        }
        let sites: Vec<usize> = (0..window.len()).collect();
        match self {
            Process::Bernoulli { eta, .. } => Ok(Measure::BlockProduct(BlockProductMeasure::iid(eta, sites)?)),
            Process::Markov { chain } => {
                let pos = integer_positions(&window)?;
                if pos.is_empty() {
                    return Ok(Measure::BlockProduct(BlockProductMeasure::new(chain.alphabet(), sites, vec![], vec![])?));
                }
                let min = *pos.iter().min().unwrap();
                let mut order: Vec<usize> = sites.clone();
                order.sort_by_key(|&j| pos[j]);
                let law = BlockLaw::Markov {
                    chain: chain.clone(),
                    positions: order.iter().map(|&j| (pos[j] - min) as usize).collect(),
                };
                let block = Block {
                    sites: order,
                    law: Arc::new(law),
                };
                Ok(Measure::BlockProduct(BlockProductMeasure::new(chain.alphabet(), sites, vec![block], vec![])?))
            }
            Process::Coinduced { h, presentation, .. } => {
                if window.is_empty() {
                    return Ok(Measure::BlockProduct(BlockProductMeasure::new(self.alphabet(), sites, vec![], vec![])?));
                }
                let dec = presentation.coset_decompose(&window, h)?;
                let full = self.enlarged_marginal(&dec)?;
                let picked: Vec<usize> = dec.membership.iter().map(|&(k, i)| dec.enlarged_index(k, i)).collect();
                let restricted = full.marginal(&picked)?;
                let back: std::collections::HashMap<usize, usize> = picked.iter().enumerate().map(|(j, &s)| (s, j)).collect();
                restricted.relabel(|s| back[&s])
            }
        }
    }
}

/// On-disk process description; matrices are row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProcessConfig {
    Bernoulli {
        eta: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<GroupPresentation>,
    },
    Markov {
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
    Coinduced {
        base: Box<ProcessConfig>,
        h: String,
        group: GroupPresentation,
    },
}

/// Entropy of the base process at one placement of equal-length windows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlacementCheck {
    pub gap: u64,
    pub windows: usize,
    pub joint_entropy: f64,
    pub required: f64,
    pub passed: bool,
}

/// Outcome of [`uniform_mixing_radius`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingRadius {
    pub window_len: usize,
    pub epsilon: f64,
    pub max_windows: usize,
    pub gap_cap: u64,
    pub window_entropy: f64,
    /// Least gap from which every tested gap up to the cap passes.
    pub radius: Option<u64>,
    pub family: String,
    pub checks: Vec<PlacementCheck>,
}

/// Smallest gap `g` such that `q` windows of length `window_len`, placed with
/// gap `d >= g` between consecutive windows, carry joint entropy at least
/// `q (H(nu_L) - epsilon)` for all `2 <= q <= max_windows` and all tested
/// `d` up to `gap_cap`.
pub fn uniform_mixing_radius(
    process: &Process,
    window_len: usize,
    epsilon: f64,
    max_windows: usize,
    gap_cap: u64,
) -> Result<MixingRadius> {
    if window_len == 0 {
        return Err(invalid_arg("window_len", "must be positive"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid_arg("epsilon", "must be positive"));
    }
    if max_windows < 2 {
        return Err(invalid_arg("max_windows", "must be at least 2"));
    }
    if gap_cap == 0 {
        return Err(invalid_arg("gap_cap", "must be positive"));
    }
    let interval = |start: i64| (0..window_len as i64).map(move |j| GroupWord::Abelian(vec![start + j]));
    let single: Vec<GroupWord> = interval(0).collect();
    let h_window = process.marginal(&single)?.entropy();
    let mut checks = Vec::new();
    for gap in 1..=gap_cap {
        let stride = window_len as i64 - 1 + gap as i64;
        for q in 2..=max_windows {
            let union: Vec<GroupWord> = (0..q as i64).flat_map(|k| interval(k * stride)).collect();
            let joint = process.marginal(&union)?.entropy();
            let required = q as f64 * (h_window - epsilon);
            checks.push(PlacementCheck {
                gap,
                windows: q,
                joint_entropy: joint,
                required,
                passed: joint >= required,
            });
        }
    }
    let mut radius = None;
    for gap in (1..=gap_cap).rev() {
        if checks.iter().filter(|c| c.gap == gap).all(|c| c.passed) {
            radius = Some(gap);
        } else {
            break;
        }
    }
    Ok(MixingRadius {
        window_len,
        epsilon,
        max_windows,
        gap_cap,
        window_entropy: h_window,
        radius,
        family: format!(
            "q in 2..={max_windows} windows of length {window_len}, consecutive windows at distance d, d in 1..={gap_cap}"
        ),
        checks,
    })
}

/// Separation radius for model vertices derived from a base gap: the base
/// gap scaled by `rho(h)` plus twice the largest word length in the
/// enlarged window.
pub fn inflate_radius(presentation: &GroupPresentation, decomposition: &CosetDecomposition, base_gap: u64) -> f64 {
    let reach = decomposition
        .enlarged
        .iter()
        .map(|f| presentation.word_metric(f))
        .fold(0.0, f64::max);
    base_gap as f64 * presentation.word_metric(&decomposition.h) + 2.0 * reach
}
