//! Finitely generated groups in normal form: free-abelian groups `Z^d` and
//! free groups `F_k`, each carrying a weighted word metric.
//!
//! The metric is right-invariant, `rho(g, g') = |g g'^-1|_w`, where `|.|_w`
//! is the least total generator weight of a word representing the element.
//! In both supported families the normal form is a geodesic, so the metric
//! has a closed form.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};

/// Slack used when comparing metric values against radii.
pub const METRIC_TOL: f64 = 1e-9;

/// Default refusal threshold for [`GroupPresentation::ball`].
pub const DEFAULT_BALL_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    FreeAbelian,
    Free,
}

/// A free-abelian or free group with positive generator weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PresentationFile", into = "PresentationFile")]
pub struct GroupPresentation {
    kind: GroupKind,
    rank: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PresentationFile {
    kind: GroupKind,
    rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl TryFrom<PresentationFile> for GroupPresentation {
    type Error = Error;

    fn try_from(file: PresentationFile) -> Result<Self> {
        let weights = file.weights.unwrap_or_else(|| vec![1.0; file.rank]);
        GroupPresentation::new(file.kind, file.rank, weights)
    }
}

impl From<GroupPresentation> for PresentationFile {
    fn from(p: GroupPresentation) -> Self {
        PresentationFile {
            kind: p.kind,
            rank: p.rank,
            weights: Some(p.weights),
        }
    }
}

/// One `(generator, exponent)` block of a reduced free word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Syllable(pub usize, pub i64);

/// A group element in normal form.
///
/// Free-abelian elements are exponent vectors. Free elements are reduced
/// syllable lists: adjacent syllables use distinct generators and no
/// exponent is zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupWord {
    Abelian(Vec<i64>),
    Free(Vec<Syllable>),
}

impl GroupWord {
    pub fn is_identity(&self) -> bool {
        match self {
            GroupWord::Abelian(e) => e.iter().all(|&x| x == 0),
            GroupWord::Free(s) => s.is_empty(),
        }
    }

    /// Number of generator letters in the normal form.
    pub fn letter_length(&self) -> u64 {
        match self {
            GroupWord::Abelian(e) => e.iter().map(|x| x.unsigned_abs()).sum(),
            GroupWord::Free(s) => s.iter().map(|s| s.1.unsigned_abs()).sum(),
        }
    }

    pub fn inverse(&self) -> GroupWord {
        match self {
            GroupWord::Abelian(e) => GroupWord::Abelian(e.iter().map(|x| -x).collect()),
            GroupWord::Free(s) => {
                GroupWord::Free(s.iter().rev().map(|&Syllable(g, e)| Syllable(g, -e)).collect())
            }
        }
    }
}

fn generator_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("g{i}")
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupWord::Abelian(e) => {
                write!(f, "[")?;
                for (i, x) in e.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            GroupWord::Free(s) if s.is_empty() => write!(f, "e"),
            GroupWord::Free(s) => {
                for (i, &Syllable(g, e)) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{}", generator_name(g))?;
                    if e != 1 {
                        write!(f, "^{e}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Appends a syllable to a reduced word, cancelling against the tail.
fn push_syllable(word: &mut Vec<Syllable>, gen: usize, exp: i64) {
    if exp == 0 {
        return;
    }
    match word.last_mut() {
        Some(last) if last.0 == gen => {
            last.1 += exp;
            if last.1 == 0 {
                word.pop();
            }
        }
        _ => word.push(Syllable(gen, exp)),
    }
}

/// Result of splitting a finite set along right cosets of `<h>`.
///
/// Every element of the enlarged set is `h^i t_k` for `i` in the common
/// interval and `t_k` a transversal element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CosetDecomposition {
    pub h: GroupWord,
    /// Inclusive exponent interval `[lo, hi]`.
    pub interval: (i64, i64),
    pub transversal: Vec<GroupWord>,
    /// `h^i t_k`, coset-major then exponent ascending.
    pub enlarged: Vec<GroupWord>,
    /// For each input element, its `(coset index, exponent)`.
    pub membership: Vec<(usize, i64)>,
}

impl CosetDecomposition {
    pub fn cosets(&self) -> usize {
        self.transversal.len()
    }

    pub fn interval_len(&self) -> usize {
        (self.interval.1 - self.interval.0 + 1) as usize
    }

    pub fn exponents(&self) -> impl Iterator<Item = i64> {
        self.interval.0..=self.interval.1
    }

    /// Index of `h^i t_k` inside [`Self::enlarged`].
    pub fn enlarged_index(&self, coset: usize, exponent: i64) -> usize {
        coset * self.interval_len() + (exponent - self.interval.0) as usize
    }
}

impl GroupPresentation {
    pub fn new(kind: GroupKind, rank: usize, weights: Vec<f64>) -> Result<Self> {
        if rank == 0 {
            return Err(invalid_arg("rank", "rank must be at least 1"));
        }
        if weights.len() != rank {
            return Err(invalid_arg(
                "weights",
                format!("expected {rank} weights, got {}", weights.len()),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(invalid_arg("weights", format!("weight {w} is not strictly positive")));
        }
        Ok(GroupPresentation { kind, rank, weights })
    }

    pub fn free_abelian(rank: usize) -> Result<Self> {
        Self::new(GroupKind::FreeAbelian, rank, vec![1.0; rank])
    }

    pub fn free(rank: usize) -> Result<Self> {
        Self::new(GroupKind::Free, rank, vec![1.0; rank])
    }

    /// `Z` with unit weight.
    pub fn integers() -> Self {
        Self::free_abelian(1).expect("rank 1 is valid")
    }

    pub fn with_weights(self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, self.rank, weights)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn identity(&self) -> GroupWord {
        match self.kind {
            GroupKind::FreeAbelian => GroupWord::Abelian(vec![0; self.rank]),
            GroupKind::Free => GroupWord::Free(Vec::new()),
        }
    }

    pub fn generator(&self, i: usize) -> GroupWord {
        self.generator_power(i, 1)
    }

    /// `g_i^e`. Panics if `i` is not a generator index.
    pub fn generator_power(&self, i: usize, e: i64) -> GroupWord {
        assert!(i < self.rank, "generator {i} out of range");
        match self.kind {
            GroupKind::FreeAbelian => {
                let mut v = vec![0; self.rank];
                v[i] = e;
                GroupWord::Abelian(v)
            }
            GroupKind::Free => {
                let mut s = Vec::new();
                push_syllable(&mut s, i, e);
                GroupWord::Free(s)
            }
        }
    }

    /// Checks that `g` is a normal-form word of this presentation.
    pub fn check(&self, g: &GroupWord) -> Result<()> {
        let foreign = |reason: &str| Error::ForeignWord {
            word: g.to_string(),
            reason: reason.to_string(),
        };
        match (self.kind, g) {
            (GroupKind::FreeAbelian, GroupWord::Abelian(e)) => {
                if e.len() != self.rank {
                    return Err(foreign("exponent vector has the wrong dimension"));
                }
            }
            (GroupKind::Free, GroupWord::Free(s)) => {
                for (i, &Syllable(gen, exp)) in s.iter().enumerate() {
                    if gen >= self.rank {
                        return Err(foreign("generator index out of range"));
                    }
                    if exp == 0 {
                        return Err(foreign("zero exponent"));
                    }
                    if i > 0 && s[i - 1].0 == gen {
                        return Err(foreign("adjacent syllables share a generator"));
                    }
                }
            }
            _ => return Err(foreign("word kind does not match the group kind")),
        }
        Ok(())
    }

    /// Brings a possibly unreduced word into normal form.
    ///
    /// The empty list deserializes as an abelian word; for free groups it is
    /// reinterpreted as the identity.
    pub fn normalize(&self, g: &GroupWord) -> Result<GroupWord> {
        let out = match (self.kind, g) {
            (GroupKind::Free, GroupWord::Abelian(e)) if e.is_empty() => GroupWord::Free(Vec::new()),
            (GroupKind::Free, GroupWord::Free(s)) => {
                let mut out = Vec::with_capacity(s.len());
                for &Syllable(gen, exp) in s {
                    push_syllable(&mut out, gen, exp);
                }
                GroupWord::Free(out)
            }
            _ => g.clone(),
        };
        self.check(&out)?;
        Ok(out)
    }

    pub fn mul(&self, a: &GroupWord, b: &GroupWord) -> Result<GroupWord> {
        self.check(a)?;
        self.check(b)?;
        Ok(mul_unchecked(a, b))
    }

    pub fn pow(&self, g: &GroupWord, k: i64) -> Result<GroupWord> {
        self.check(g)?;
        Ok(pow_unchecked(g, k))
    }

    /// `rho(g, 1)`: the least total weight of a word representing `g`.
    pub fn word_metric(&self, g: &GroupWord) -> f64 {
        match g {
            GroupWord::Abelian(e) => e
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x.unsigned_abs() as f64 * w)
                .sum(),
            GroupWord::Free(s) => s
                .iter()
                .map(|&Syllable(gen, exp)| exp.unsigned_abs() as f64 * self.weights[gen])
                .sum(),
        }
    }

    /// Right-invariant distance `rho(a, b) = rho(a b^-1, 1)`.
    pub fn distance(&self, a: &GroupWord, b: &GroupWord) -> Result<f64> {
        Ok(self.word_metric(&self.mul(a, &b.inverse())?))
    }

    pub fn ball(&self, radius: f64) -> Result<Vec<GroupWord>> {
        self.ball_with_cap(radius, DEFAULT_BALL_CAP)
    }

    /// All elements with `rho(g, 1) <= radius`, sorted.
    ///
    /// Enumeration stops with [`Error::CapExceeded`] as soon as more than
    /// `cap` elements have been produced.
    pub fn ball_with_cap(&self, radius: f64, cap: usize) -> Result<Vec<GroupWord>> {
        if radius.is_nan() || radius < 0.0 {
            return Err(invalid_arg("radius", format!("{radius} is negative")));
        }
        let mut out = Vec::new();
        let overflow = || Error::CapExceeded {
            what: "ball size",
            size: cap as u128 + 1,
            cap: cap as u128,
        };
        match self.kind {
            GroupKind::FreeAbelian => {
                let mut cur = vec![0i64; self.rank];
                if !self.abelian_ball(0, radius + METRIC_TOL, &mut cur, &mut out, cap) {
                    return Err(overflow());
                }
            }
            GroupKind::Free => {
                let mut cur = Vec::new();
                if !self.free_ball(radius + METRIC_TOL, &mut cur, &mut out, cap) {
                    return Err(overflow());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn abelian_ball(
        &self,
        coord: usize,
        budget: f64,
        cur: &mut Vec<i64>,
        out: &mut Vec<GroupWord>,
        cap: usize,
    ) -> bool {
        if coord == self.rank {
            if out.len() >= cap {
                return false;
            }
            out.push(GroupWord::Abelian(cur.clone()));
            return true;
        }
        let w = self.weights[coord];
        let max = (budget / w).floor() as i64;
        for e in -max..=max {
            cur[coord] = e;
            let rest = budget - e.unsigned_abs() as f64 * w;
            if !self.abelian_ball(coord + 1, rest, cur, out, cap) {
                return false;
            }
        }
        cur[coord] = 0;
        true
    }

    fn free_ball(
        &self,
        budget: f64,
        cur: &mut Vec<Syllable>,
        out: &mut Vec<GroupWord>,
        cap: usize,
    ) -> bool {
        if out.len() >= cap {
            return false;
        }
        out.push(GroupWord::Free(cur.clone()));
        for gen in 0..self.rank {
            if self.weights[gen] > budget {
                continue;
            }
            for sign in [1i64, -1] {
                // extending by the inverse of the last letter would not be reduced
                if let Some(&Syllable(g, e)) = cur.last() {
                    if g == gen && e.signum() != sign {
                        continue;
                    }
                }
                let saved = cur.clone();
                push_syllable(cur, gen, sign);
                let ok = self.free_ball(budget - self.weights[gen], cur, out, cap);
                *cur = saved;
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    /// Writes `g = h^i t` with `t` a canonical representative of the right
    /// coset `<h> g`. Returns `(i, t)`.
    pub fn coset_representative(&self, g: &GroupWord, h: &GroupWord) -> Result<(i64, GroupWord)> {
        self.check(g)?;
        self.check(h)?;
        if h.is_identity() {
            return Err(Error::TorsionElement { word: h.to_string() });
        }
        match (g, h) {
            (GroupWord::Abelian(gv), GroupWord::Abelian(hv)) => {
                let j = hv.iter().position(|&x| x != 0).expect("h is not the identity");
                let i = gv[j].div_euclid(hv[j]);
                let t = gv.iter().zip(hv).map(|(a, b)| a - i * b).collect();
                Ok((i, GroupWord::Abelian(t)))
            }
            _ => {
                // |h^k g| >= |k| - |g| so the shortest element of the coset
                // is h^k g for some |k| <= 2|g|.
                let bound = 2 * g.letter_length() as i64 + 1;
                let mut best: Option<(u64, GroupWord, i64)> = None;
                for k in -bound..=bound {
                    let c = mul_unchecked(&pow_unchecked(h, k), g);
                    let key = c.letter_length();
                    let better = match &best {
                        None => true,
                        Some((bl, bw, _)) => (key, &c) < (*bl, bw),
                    };
                    if better {
                        best = Some((key, c, k));
                    }
                }
                let (_, t, k) = best.expect("search range is nonempty");
                Ok((-k, t))
            }
        }
    }

    pub fn same_right_coset(&self, a: &GroupWord, b: &GroupWord, h: &GroupWord) -> Result<bool> {
        Ok(self.coset_representative(a, h)?.1 == self.coset_representative(b, h)?.1)
    }

    /// Splits `window` along right cosets of `<h>` and enlarges it so every
    /// coset piece is `h^I t_k` for one common interval `I` of minimal
    /// length.
    pub fn coset_decompose(&self, window: &[GroupWord], h: &GroupWord) -> Result<CosetDecomposition> {
        if window.is_empty() {
            return Err(invalid_arg("window", "the window must be nonempty"));
        }
        let mut reps: Vec<GroupWord> = Vec::new();
        let mut index: BTreeMap<GroupWord, usize> = BTreeMap::new();
        let mut raw = Vec::with_capacity(window.len());
        for g in window {
            let (i, t) = self.coset_representative(g, h)?;
            let k = *index.entry(t.clone()).or_insert_with(|| {
                reps.push(t);
                reps.len() - 1
            });
            raw.push((k, i));
        }
        let mut ranges = vec![(i64::MAX, i64::MIN); reps.len()];
        for &(k, i) in &raw {
            ranges[k].0 = ranges[k].0.min(i);
            ranges[k].1 = ranges[k].1.max(i);
        }
        let span = ranges.iter().map(|(a, b)| b - a).max().unwrap_or(0);
        let lo = ranges.iter().map(|r| r.0).min().unwrap_or(0);
        let hi = lo + span;
        // cosets that stick out above the interval are re-anchored
        let shifts: Vec<i64> = ranges.iter().map(|&(_, b)| (b - hi).max(0)).collect();
        let transversal: Vec<GroupWord> = reps
            .iter()
            .zip(&shifts)
            .map(|(t, &s)| mul_unchecked(&pow_unchecked(h, s), t))
            .collect();
        let membership = raw.iter().map(|&(k, i)| (k, i - shifts[k])).collect();
        let mut enlarged = Vec::with_capacity(transversal.len() * (span as usize + 1));
        for t in &transversal {
            for i in lo..=hi {
                enlarged.push(mul_unchecked(&pow_unchecked(h, i), t));
            }
        }
        Ok(CosetDecomposition {
            h: h.clone(),
            interval: (lo, hi),
            transversal,
            enlarged,
            membership,
        })
    }

    /// Parses the textual word syntax used in file keys: `[1,-2]` for
    /// abelian words, `a^2 b^-1` (or `e`) for free words.
    pub fn parse_word(&self, text: &str) -> Result<GroupWord> {
        let text = text.trim();
        let bad = |reason: &str| Error::ForeignWord {
            word: text.to_string(),
            reason: reason.to_string(),
        };
        let word = if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            let exps = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|x| x.trim().parse::<i64>().map_err(|_| bad("bad exponent")))
                    .collect::<Result<Vec<_>>>()?
            };
            GroupWord::Abelian(exps)
        } else if text == "e" || text.is_empty() {
            return Ok(self.identity());
        } else {
            let mut syl = Vec::new();
            for tok in text.split_whitespace() {
                let (name, exp) = match tok.split_once('^') {
                    Some((n, e)) => (n, e.parse::<i64>().map_err(|_| bad("bad exponent"))?),
                    None => (tok, 1),
                };
                let gen = if let Some(idx) = name.strip_prefix('g').filter(|r| !r.is_empty()) {
                    idx.parse::<usize>().map_err(|_| bad("bad generator"))?
                } else if name.len() == 1 && name.as_bytes()[0].is_ascii_lowercase() {
                    (name.as_bytes()[0] - b'a') as usize
                } else {
                    return Err(bad("bad generator"));
                };
                syl.push(Syllable(gen, exp));
            }
            GroupWord::Free(syl)
        };
        self.normalize(&word)
    }
}

pub(crate) fn mul_unchecked(a: &GroupWord, b: &GroupWord) -> GroupWord {
    match (a, b) {
        (GroupWord::Abelian(x), GroupWord::Abelian(y)) => {
            GroupWord::Abelian(x.iter().zip(y).map(|(p, q)| p + q).collect())
        }
        (GroupWord::Free(x), GroupWord::Free(y)) => {
            let mut out = x.clone();
            for &Syllable(g, e) in y {
                push_syllable(&mut out, g, e);
            }
            GroupWord::Free(out)
        }
        _ => panic!("mixed word kinds"),
    }
}

pub(crate) fn pow_unchecked(g: &GroupWord, k: i64) -> GroupWord {
    match g {
        GroupWord::Abelian(x) => GroupWord::Abelian(x.iter().map(|e| e * k).collect()),
        GroupWord::Free(_) => {
            let base = if k < 0 { g.inverse() } else { g.clone() };
            let mut out = GroupWord::Free(Vec::new());
            for _ in 0..k.unsigned_abs() {
                out = mul_unchecked(&out, &base);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> GroupPresentation {
        GroupPresentation::integers()
    }

    fn f2() -> GroupPresentation {
        GroupPresentation::free(2).unwrap()
    }

    #[test]
    fn identity_and_inverse() {
        let g = f2();
        let a = g.generator(0);
        assert_eq!(g.mul(&g.identity(), &a).unwrap(), a);
        assert_eq!(g.mul(&a, &a.inverse()).unwrap(), g.identity());
        let h2 = z().generator_power(0, 2);
        let h3 = z().generator_power(0, 3);
        assert_eq!(z().mul(&h2, &h3).unwrap(), z().generator_power(0, 5));
    }

    #[test]
    fn free_cancellation_cascades() {
        let g = f2();
        let w = g.parse_word("a b^2").unwrap();
        let v = g.parse_word("b^-2 a^-1 b").unwrap();
        assert_eq!(g.mul(&w, &v).unwrap(), g.generator(1));
    }

    #[test]
    fn mismatched_presentations_are_rejected() {
        let err = z().mul(&z().generator(0), &f2().generator(0));
        assert!(matches!(err, Err(Error::ForeignWord { .. })));
        let z2 = GroupPresentation::free_abelian(2).unwrap();
        assert!(z2.mul(&z2.identity(), &z().generator(0)).is_err());
    }

    #[test]
    fn metric_examples() {
        assert_eq!(z().word_metric(&z().identity()), 0.0);
        assert_eq!(z().word_metric(&z().generator_power(0, 3)), 3.0);
        let g = f2().with_weights(vec![1.0, 2.0]).unwrap();
        let w = g.parse_word("a b^-1").unwrap();
        assert_eq!(g.word_metric(&w), 3.0);
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(z().ball(0.0).unwrap(), vec![z().identity()]);
        let b = z().ball(2.0).unwrap();
        let exps: Vec<i64> = b
            .iter()
            .map(|w| match w {
                GroupWord::Abelian(e) => e[0],
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(exps, vec![-2, -1, 0, 1, 2]);
        assert_eq!(f2().ball(2.0).unwrap().len(), 17);
        assert_eq!(f2().ball(0.0).unwrap().len(), 1);
    }

    #[test]
    fn ball_cap_refuses() {
        let err = f2().ball_with_cap(6.0, 100);
        assert!(matches!(err, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn coset_single_element() {
        let d = z().coset_decompose(&[z().identity()], &z().generator(0)).unwrap();
        assert_eq!(d.interval, (0, 0));
        assert_eq!(d.transversal, vec![z().identity()]);
    }

    #[test]
    fn coset_one_coset_in_z() {
        let g = z();
        let f: Vec<_> = (-1..=1).map(|i| g.generator_power(0, i)).collect();
        let d = g.coset_decompose(&f, &g.generator(0)).unwrap();
        assert_eq!(d.interval, (-1, 1));
        assert_eq!(d.cosets(), 1);
    }

    #[test]
    fn coset_z2_enlarges() {
        let g = GroupPresentation::free_abelian(2).unwrap();
        let f = vec![
            GroupWord::Abelian(vec![0, 0]),
            GroupWord::Abelian(vec![1, 0]),
            GroupWord::Abelian(vec![0, 1]),
        ];
        let d = g.coset_decompose(&f, &GroupWord::Abelian(vec![1, 0])).unwrap();
        assert_eq!(d.interval, (0, 1));
        assert_eq!(
            d.transversal,
            vec![GroupWord::Abelian(vec![0, 0]), GroupWord::Abelian(vec![0, 1])]
        );
        assert!(d.enlarged.contains(&GroupWord::Abelian(vec![1, 1])));
        assert_eq!(d.enlarged.len(), 4);
    }

    #[test]
    fn coset_rejects_identity_generator() {
        let g = z();
        assert!(matches!(
            g.coset_decompose(&[g.identity()], &g.identity()),
            Err(Error::TorsionElement { .. })
        ));
    }

    #[test]
    fn coset_misaligned_ranges_share_minimal_interval() {
        // coset of 1 uses exponents {0,1}; coset of b uses {3}
        let g = f2();
        let a = g.generator(0);
        let b = g.generator(1);
        let f = vec![
            g.identity(),
            a.clone(),
            g.mul(&g.pow(&a, 3).unwrap(), &b).unwrap(),
        ];
        let d = g.coset_decompose(&f, &a).unwrap();
        assert_eq!(d.interval_len(), 2);
        for w in &f {
            assert!(d.enlarged.contains(w), "{w} missing");
        }
    }

    #[test]
    fn free_coset_representative_roundtrip() {
        let g = f2();
        let h = g.parse_word("a b").unwrap();
        let x = g.parse_word("b a^-1 b^2").unwrap();
        let (i, t) = g.coset_representative(&x, &h).unwrap();
        assert_eq!(g.mul(&g.pow(&h, i).unwrap(), &t).unwrap(), x);
        // same coset representative for h^5 x
        let y = g.mul(&g.pow(&h, 5).unwrap(), &x).unwrap();
        assert_eq!(g.coset_representative(&y, &h).unwrap().1, t);
    }

    #[test]
    fn parse_and_display() {
        let g = f2();
        let w = g.parse_word("a^2 b^-1").unwrap();
        assert_eq!(w.to_string(), "a^2 b^-1");
        assert_eq!(g.parse_word("e").unwrap(), g.identity());
        let z2 = GroupPresentation::free_abelian(2).unwrap();
        assert_eq!(z2.parse_word("[1,-2]").unwrap(), GroupWord::Abelian(vec![1, -2]));
        assert!(z2.parse_word("[1]").is_err());
    }

    #[test]
    fn presentation_json() {
        let p: GroupPresentation =
            serde_json::from_str(r#"{"kind":"free","rank":2,"weights":[1.0,2.0]}"#).unwrap();
        assert_eq!(p.weights(), &[1.0, 2.0]);
        let bad: Result<GroupPresentation, _> =
            serde_json::from_str(r#"{"kind":"free-abelian","rank":1,"weights":[0.0]}"#);
        assert!(bad.is_err());
        let d: GroupPresentation = serde_json::from_str(r#"{"kind":"free-abelian","rank":3}"#).unwrap();
        assert_eq!(d.weights(), &[1.0; 3]);
    }
}
