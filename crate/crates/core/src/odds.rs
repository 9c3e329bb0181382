//! 1x2 decimal odds from class probabilities, and a flat-stake backtester.
//!
//! Class codes map onto the 1x2 legs as `1 -> "1"` (home win), `0 -> "X"`
//! (draw) and `2 -> "2"` (away win), with probabilities taken from the home
//! side's perspective. The overround is spread multiplicatively: every leg's
//! implied probability is `p * (1 + m)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::ProbTriple;
use crate::NUM_CLASSES;

pub const DEFAULT_MARGIN: f64 = 0.05;
/// Probability floor; caps odds at `1 / 1e-4 = 10000`.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum OddsError {
    #[error("probability {0} is not positive")]
    NonPositiveAfterClip(f64),
    #[error("probability {0} exceeds 1")]
    ProbabilityAboveOne(f64),
    #[error("invalid probability triple: {0}")]
    InvalidProbTriple(String),
    #[error("odds {0} are below 1")]
    OddsBelowOne(f64),
    #[error("margin {0} outside [0, 1)")]
    InvalidMargin(f64),
    #[error("stake {0} must be positive")]
    InvalidStake(f64),
    #[error("length mismatch: {probs} forecasts, {actuals} results, {book} prices")]
    LengthMismatch { probs: usize, actuals: usize, book: usize },
    #[error("result code {0} is not a class")]
    UnknownOutcome(usize),
}

pub type Result<T> = std::result::Result<T, OddsError>;

/// Bookmaker overround, e.g. `0.05` for 5%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Margin(f64);

impl Margin {
    pub fn new(m: f64) -> Result<Self> {
        if (0.0..1.0).contains(&m) {
            Ok(Self(m))
        } else {
            Err(OddsError::InvalidMargin(m))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Margin {
    fn default() -> Self {
        Self(DEFAULT_MARGIN)
    }
}

impl TryFrom<f64> for Margin {
    type Error = OddsError;

    fn try_from(m: f64) -> Result<Self> {
        Margin::new(m)
    }
}

impl From<Margin> for f64 {
    fn from(m: Margin) -> f64 {
        m.0
    }
}

/// Bounds applied when turning probabilities into prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipPolicy {
    pub prob_floor: f64,
    pub odds_floor: f64,
}

impl Default for ClipPolicy {
    fn default() -> Self {
        Self {
            prob_floor: DEFAULT_PROB_FLOOR,
            odds_floor: 1.0,
        }
    }
}

impl ClipPolicy {
    pub fn odds_cap(&self) -> f64 {
        1.0 / self.prob_floor
    }

    fn price(&self, implied: f64) -> f64 {
        (1.0 / implied.clamp(self.prob_floor, 1.0)).max(self.odds_floor)
    }
}

/// `1 / p` with `p` floored at [`DEFAULT_PROB_FLOOR`].
pub fn prob_to_odds(p: f64) -> Result<f64> {
    prob_to_odds_with(p, &ClipPolicy::default())
}

pub fn prob_to_odds_with(p: f64, policy: &ClipPolicy) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(OddsError::NonPositiveAfterClip(p));
    }
    if p > 1.0 {
        return Err(OddsError::ProbabilityAboveOne(p));
    }
    Ok(policy.price(p))
}

/// Probability encoded by a decimal price.
pub fn implied_prob(odds: f64) -> Result<f64> {
    if odds.is_nan() || odds < 1.0 {
        return Err(OddsError::OddsBelowOne(odds));
    }
    Ok(1.0 / odds)
}

/// Decimal prices for the three 1x2 legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsTriple {
    pub home: f64,
    pub draw: f64,
    pub away: f64,
}

impl OddsTriple {
    /// Price of the leg that pays when the home side's result is `class`.
    pub fn for_class(&self, class: usize) -> f64 {
        match class {
            0 => self.draw,
            1 => self.home,
            _ => self.away,
        }
    }

    /// `1 / odds` per class code.
    pub fn implied_by_class(&self) -> [f64; NUM_CLASSES] {
        [1.0 / self.draw, 1.0 / self.home, 1.0 / self.away]
    }

    /// Sum of implied probabilities minus one.
    pub fn overround(&self) -> f64 {
        self.implied_by_class().iter().sum::<f64>() - 1.0
    }

    /// Implied probabilities rescaled to sum to one.
    pub fn book_probabilities(&self) -> [f64; NUM_CLASSES] {
        let imp = self.implied_by_class();
        let total: f64 = imp.iter().sum();
        imp.map(|q| q / total)
    }
}

/// Prices a fixture: `odds_i = 1 / clip(p_i * (1 + m))`.
pub fn make_book(probs: &ProbTriple, margin: Margin) -> Result<OddsTriple> {
    make_book_with(probs, margin, &ClipPolicy::default())
}

pub fn make_book_with(probs: &ProbTriple, margin: Margin, policy: &ClipPolicy) -> Result<OddsTriple> {
    probs
        .validate()
        .map_err(|e| OddsError::InvalidProbTriple(e.to_string()))?;
    let scale = 1.0 + margin.value();
    Ok(OddsTriple {
        home: policy.price(probs.p_home * scale),
        draw: policy.price(probs.p_draw * scale),
        away: policy.price(probs.p_away * scale),
    })
}

/// Expected return on investment of a unit bet on `class` at `book`, when
/// outcomes follow `probs`.
pub fn expected_roi(book: &OddsTriple, class: usize, probs: &[f64; NUM_CLASSES]) -> f64 {
    probs[class] * book.for_class(class) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Stake a fixed amount on the most probable class.
    FlatStakeArgmax { stake: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeBreakdown {
    pub class: usize,
    pub bets: usize,
    pub wins: usize,
    pub losses: usize,
    pub staked: f64,
    pub returned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub n_bets: usize,
    pub staked: f64,
    pub returned: f64,
    /// `(returned - staked) / staked`; 0 when nothing was staked.
    pub roi: f64,
    pub per_outcome: Vec<OutcomeBreakdown>,
}

/// Replays fixtures in order, betting per `strategy` at the quoted `book` prices.
pub fn backtest(
    probs: &[ProbTriple],
    actuals: &[usize],
    book: &[OddsTriple],
    strategy: Strategy,
) -> Result<BacktestReport> {
    if probs.len() != actuals.len() || probs.len() != book.len() {
        return Err(OddsError::LengthMismatch {
            probs: probs.len(),
            actuals: actuals.len(),
            book: book.len(),
        });
    }
    let Strategy::FlatStakeArgmax { stake } = strategy;
    if !(stake > 0.0 && stake.is_finite()) {
        return Err(OddsError::InvalidStake(stake));
    }
    let mut per_outcome: Vec<OutcomeBreakdown> = (0..NUM_CLASSES)
        .map(|class| OutcomeBreakdown {
            class,
            ..Default::default()
        })
        .collect();
    let (mut staked, mut returned) = (0.0, 0.0);
    for ((p, &actual), prices) in probs.iter().zip(actuals).zip(book) {
        if actual >= NUM_CLASSES {
            return Err(OddsError::UnknownOutcome(actual));
        }
        let pick = p.argmax();
        let slot = &mut per_outcome[pick];
        slot.bets += 1;
        slot.staked += stake;
        staked += stake;
        if pick == actual {
            let payout = stake * prices.for_class(pick);
            slot.wins += 1;
            slot.returned += payout;
            returned += payout;
        } else {
            slot.losses += 1;
        }
    }
    let roi = if staked > 0.0 { (returned - staked) / staked } else { 0.0 };
    Ok(BacktestReport {
        n_bets: probs.len(),
        staked,
        returned,
        roi,
        per_outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(draw: f64, home: f64, away: f64) -> ProbTriple {
        ProbTriple::new(draw, home, away).unwrap()
    }

    #[test]
    fn reciprocal_odds() {
        assert_eq!(prob_to_odds(0.5).unwrap(), 2.00);
        assert_eq!(prob_to_odds(1.0).unwrap(), 1.0);
        assert_eq!(prob_to_odds(1e-9).unwrap(), 10000.0);
        assert!(prob_to_odds(0.0).is_err());
        assert!(prob_to_odds(-0.1).is_err());
    }

    #[test]
    fn implied_examples() {
        assert_eq!(implied_prob(2.0).unwrap(), 0.5);
        assert_eq!(implied_prob(1.0).unwrap(), 1.0);
        assert_eq!(implied_prob(0.9), Err(OddsError::OddsBelowOne(0.9)));
    }

    #[test]
    fn book_with_margin() {
        // home 0.5, draw 0.3, away 0.2
        let book = make_book(&triple(0.3, 0.5, 0.2), Margin::new(0.05).unwrap()).unwrap();
        assert!((book.home - 1.904762).abs() < 1e-6);
        assert!((book.draw - 3.174603).abs() < 1e-6);
        assert!((book.away - 4.761905).abs() < 1e-6);
        assert!((book.overround() - 0.05).abs() < 1e-9);
    }

    #[test]
    fn fair_book_and_clipping() {
        let book = make_book(&triple(0.25, 0.45, 0.30), Margin::new(0.0).unwrap()).unwrap();
        assert!((book.implied_by_class().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let book = make_book(&triple(0.0, 1.0, 0.0), Margin::new(0.0).unwrap()).unwrap();
        assert_eq!((book.home, book.draw, book.away), (1.0, 10000.0, 10000.0));
        // p * (1 + m) above 1 is floored at even money
        let book = make_book(&triple(0.0, 1.0, 0.0), Margin::new(0.1).unwrap()).unwrap();
        assert_eq!(book.home, 1.0);
    }

    #[test]
    fn margin_bounds() {
        assert!(Margin::new(1.0).is_err());
        assert!(Margin::new(-0.01).is_err());
        let m: Margin = serde_json::from_str("0.07").unwrap();
        assert_eq!(m.value(), 0.07);
        assert!(serde_json::from_str::<Margin>("1.5").is_err());
    }

    #[test]
    fn backtest_always_right_and_wrong() {
        let probs = vec![triple(0.1, 0.8, 0.1); 10];
        let evens = vec![OddsTriple { home: 2.0, draw: 2.0, away: 2.0 }; 10];
        let s = Strategy::FlatStakeArgmax { stake: 1.0 };
        let r = backtest(&probs, &[1; 10], &evens, s).unwrap();
        assert_eq!((r.staked, r.returned, r.roi), (10.0, 20.0, 1.0));
        assert_eq!(r.per_outcome[1].wins, 10);
        let r = backtest(&probs, &[2; 10], &evens, s).unwrap();
        assert_eq!((r.returned, r.roi), (0.0, -1.0));
        assert!(backtest(&probs, &[1; 9], &evens, s).is_err());
        assert!(backtest(&probs, &[1; 10], &evens, Strategy::FlatStakeArgmax { stake: 0.0 }).is_err());
    }
}
