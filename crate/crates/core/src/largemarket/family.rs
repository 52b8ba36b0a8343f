use crate::error::{Error, Result};
use crate::market::{FiniteMarket, MarketSpec};
use crate::space::DensityVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// Index rule `n ↦ market` for families without a closed form.
#[derive(Clone)]
pub struct CustomRule(pub Arc<dyn Fn(usize) -> Result<FiniteMarket> + Send + Sync>);

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomRule(..)")
    }
}

#[derive(Debug, Clone)]
pub enum FamilyKind {
    /// Market `n` is the `n`-th list entry.
    Explicit(Vec<FiniteMarket>),
    /// One period, `S0 = 0`, `S1 = 1` on a leaf of probability `alpha` and
    /// `0` on the other, for every `n`.
    IsolatedArbitrage { alpha: f64 },
    /// The same additive binomial tree for every `n`.
    Binomial { p: f64, up: f64, down: f64, horizon: usize },
    Custom(CustomRule),
}

/// A sequence of finite markets indexed by `n = 1, 2, ...`, analysed on the
/// prefix `1..=prefix`.
#[derive(Debug, Clone)]
pub struct MarketFamily {
    kind: FamilyKind,
    prefix: usize,
}

fn check_prefix(prefix: usize) -> Result<()> {
    if prefix == 0 {
        return Err(Error::InvalidInput("prefix length must be at least 1".into()));
    }
    Ok(())
}

impl MarketFamily {
    pub fn explicit(markets: Vec<FiniteMarket>) -> Result<Self> {
        check_prefix(markets.len())?;
        let prefix = markets.len();
        Ok(Self { kind: FamilyKind::Explicit(markets), prefix })
    }

    pub fn isolated_arbitrage(alpha: f64, prefix: usize) -> Result<Self> {
        check_prefix(prefix)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("isolated-arbitrage parameter must lie in (0,1), got {alpha}")));
        }
        Ok(Self { kind: FamilyKind::IsolatedArbitrage { alpha }, prefix })
    }

    pub fn binomial(p: f64, up: f64, down: f64, horizon: usize, prefix: usize) -> Result<Self> {
        check_prefix(prefix)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("binomial up probability must lie in (0,1), got {p}")));
        }
        if horizon == 0 || !up.is_finite() || !down.is_finite() {
            return Err(Error::InvalidInput("binomial family needs horizon >= 1 and finite moves".into()));
        }
        Ok(Self { kind: FamilyKind::Binomial { p, up, down, horizon }, prefix })
    }

    pub fn custom(rule: impl Fn(usize) -> Result<FiniteMarket> + Send + Sync + 'static, prefix: usize) -> Result<Self> {
        check_prefix(prefix)?;
        Ok(Self { kind: FamilyKind::Custom(CustomRule(Arc::new(rule))), prefix })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn prefix(&self) -> usize {
        self.prefix
    }

    pub fn with_prefix(mut self, prefix: usize) -> Result<Self> {
        check_prefix(prefix)?;
        if let FamilyKind::Explicit(list) = &self.kind {
            if prefix > list.len() {
                return Err(Error::InvalidInput(format!(
                    "explicit family has {} markets, prefix {prefix} requested",
                    list.len()
                )));
            }
        }
        self.prefix = prefix;
        Ok(self)
    }

    /// Closed-form families whose market does not depend on `n`.
    pub fn is_stationary(&self) -> bool {
        matches!(self.kind, FamilyKind::IsolatedArbitrage { .. } | FamilyKind::Binomial { .. })
    }

    /// Market number `n` (1-based).
    pub fn market(&self, n: usize) -> Result<FiniteMarket> {
        if n == 0 {
            return Err(Error::InvalidInput("market indices start at 1".into()));
        }
        match &self.kind {
            FamilyKind::Explicit(list) => list
                .get(n - 1)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("explicit family has no market {n}"))),
            FamilyKind::IsolatedArbitrage { alpha } => {
                FiniteMarket::one_period(&[*alpha, 1.0 - alpha], vec![0.0], vec![vec![1.0], vec![0.0]])
            }
            FamilyKind::Binomial { p, up, down, horizon } => FiniteMarket::binomial(*p, *up, *down, *horizon, 0.0),
            FamilyKind::Custom(rule) => (rule.0)(n),
        }
    }

    /// Markets `1..=prefix`.
    pub fn markets(&self) -> Result<Vec<FiniteMarket>> {
        (1..=self.prefix).map(|n| self.market(n)).collect()
    }

    /// The event on which the isolated claim pays one.
    pub fn arbitrage_event(&self) -> Option<Vec<usize>> {
        matches!(self.kind, FamilyKind::IsolatedArbitrage { .. }).then(|| vec![0])
    }

    /// Parses a family file. Relative `explicit` paths resolve against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed family file: {e}")))?;
        file.build(base)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    /// Family file text; explicit markets are written inline.
    pub fn to_json(&self) -> Result<String> {
        let (kind, params, explicit) = match &self.kind {
            FamilyKind::Explicit(list) => (
                "explicit",
                Value::Object(Default::default()),
                Some(list.iter().map(|m| ExplicitEntry::Inline(m.to_spec())).collect()),
            ),
            FamilyKind::IsolatedArbitrage { alpha } => ("klein", serde_json::json!({ "alpha": alpha }), None),
            FamilyKind::Binomial { p, up, down, horizon } => (
                "binomial",
                serde_json::json!({ "p": p, "up": up, "down": down, "horizon": horizon }),
                None,
            ),
            FamilyKind::Custom(_) => return Err(Error::Unsupported("custom families have no file form".into())),
        };
        let file = FamilyFile { kind: kind.into(), params, explicit, prefix: Some(self.prefix) };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Numerical(e.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ExplicitEntry {
    Path(String),
    Inline(MarketSpec),
}

#[derive(Debug, Serialize, Deserialize)]
struct FamilyFile {
    kind: String,
    #[serde(default)]
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    explicit: Option<Vec<ExplicitEntry>>,
    #[serde(default)]
    prefix: Option<usize>,
}

fn param(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::InvalidInput(format!("family parameter `{key}` missing or not a number")))
}

impl FamilyFile {
    fn build(self, base: Option<&Path>) -> Result<MarketFamily> {
        let prefix = self.prefix;
        let need_prefix = || prefix.ok_or_else(|| Error::InvalidInput("family file needs `prefix`".into()));
        let fam = match self.kind.as_str() {
            "klein" => MarketFamily::isolated_arbitrage(param(&self.params, "alpha")?, need_prefix()?)?,
            "binomial" => {
                let horizon = param(&self.params, "horizon")?;
                if horizon.fract() != 0.0 || horizon < 1.0 {
                    return Err(Error::InvalidInput("binomial horizon must be a positive integer".into()));
                }
                MarketFamily::binomial(
                    param(&self.params, "p")?,
                    param(&self.params, "up")?,
                    param(&self.params, "down")?,
                    horizon as usize,
                    need_prefix()?,
                )?
            }
            "explicit" => {
                let entries = self
                    .explicit
                    .ok_or_else(|| Error::InvalidInput("explicit family needs an `explicit` list".into()))?;
                let markets = entries
                    .into_iter()
                    .map(|e| match e {
                        ExplicitEntry::Inline(spec) => FiniteMarket::from_spec(&spec),
                        ExplicitEntry::Path(p) => match base {
                            Some(b) => FiniteMarket::load(b.join(&p)),
                            None => FiniteMarket::load(&p),
                        },
                    })
                    .collect::<Result<Vec<_>>>()?;
                let fam = MarketFamily::explicit(markets)?;
                match prefix {
                    Some(n) => fam.with_prefix(n)?,
                    None => fam,
                }
            }
            other => return Err(Error::InvalidInput(format!("unknown family kind `{other}`"))),
        };
        Ok(fam)
    }
}

/// Densities `dQ^n/dP^n` for `n = 1..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSeq {
    pub densities: Vec<DensityVector>,
    /// All entries are equal by construction, so statements about the prefix
    /// hold for every `n`.
    #[serde(default)]
    pub constant: bool,
}

impl MeasureSeq {
    pub fn new(densities: Vec<DensityVector>) -> Self {
        Self { densities, constant: false }
    }

    pub fn constant(density: DensityVector, len: usize) -> Self {
        Self { densities: vec![density; len], constant: true }
    }

    /// `Q^n = P^n`.
    pub fn reference(family: &MarketFamily) -> Result<Self> {
        let markets = family.markets()?;
        let seq = Self::new(markets.iter().map(|m| DensityVector::ones(m.num_leaves())).collect());
        Ok(Self { constant: family.is_stationary(), ..seq })
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    /// Density of index `n` (1-based).
    pub fn get(&self, n: usize) -> Option<&DensityVector> {
        n.checked_sub(1).and_then(|i| self.densities.get(i))
    }

    /// Checks that the first `n` densities are probability densities on the
    /// family's leaf spaces.
    pub fn validate(&self, family: &MarketFamily, n: usize) -> Result<Vec<FiniteMarket>> {
        if self.len() < n {
            return Err(Error::InvalidInput(format!("measure sequence has {} entries, {n} needed", self.len())));
        }
        let markets: Vec<FiniteMarket> = (1..=n).map(|i| family.market(i)).collect::<Result<_>>()?;
        for (i, (m, d)) in markets.iter().zip(&self.densities).enumerate() {
            d.validate_probability(m.space())
                .map_err(|e| Error::InvalidInput(format!("measure {}: {e}", i + 1)))?;
        }
        Ok(markets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_members_put_alpha_on_the_set() {
        let fam = MarketFamily::isolated_arbitrage(0.3, 5).unwrap();
        for m in fam.markets().unwrap() {
            assert_eq!(m.space().probs()[0], 0.3);
            assert_eq!(m.gains_basis().column(0), vec![1.0, 0.0]);
        }
        assert_eq!(fam.arbitrage_event(), Some(vec![0]));
        assert!(MarketFamily::isolated_arbitrage(1.0, 5).is_err());
    }

    #[test]
    fn binomial_family_is_stationary() {
        let fam = MarketFamily::binomial(0.5, 1.0, -1.0, 2, 3).unwrap();
        assert!(fam.is_stationary());
        let ms = fam.markets().unwrap();
        assert_eq!(ms.len(), 3);
        assert_eq!(ms[0].to_spec(), ms[2].to_spec());
        assert_eq!(ms[0].num_leaves(), 4);
    }

    #[test]
    fn family_file_roundtrip() {
        let fam = MarketFamily::binomial(0.4, 2.0, -1.0, 1, 7).unwrap();
        let back = MarketFamily::from_json(&fam.to_json().unwrap(), None).unwrap();
        assert_eq!(back.prefix(), 7);
        assert_eq!(back.market(3).unwrap().to_spec(), fam.market(3).unwrap().to_spec());

        let ex = MarketFamily::explicit(vec![fam.market(1).unwrap(), MarketFamily::isolated_arbitrage(0.2, 1).unwrap().market(1).unwrap()])
            .unwrap();
        let back = MarketFamily::from_json(&ex.to_json().unwrap(), None).unwrap();
        assert_eq!(back.prefix(), 2);
        assert_eq!(back.market(2).unwrap().space().probs(), &[0.2, 0.8]);
    }

    #[test]
    fn bad_family_files() {
        assert!(MarketFamily::from_json(r#"{"kind":"klein","params":{"alpha":0.3}}"#, None).is_err());
        assert!(MarketFamily::from_json(r#"{"kind":"nope","prefix":2}"#, None).is_err());
        assert!(MarketFamily::from_json(r#"{"kind":"binomial","params":{"p":0.5,"up":1,"down":-1,"horizon":1.5},"prefix":2}"#, None).is_err());
        let ok = MarketFamily::from_json(r#"{"kind":"klein","params":{"alpha":0.3},"prefix":4}"#, None).unwrap();
        assert_eq!(ok.prefix(), 4);
    }

    #[test]
    fn custom_rule_markets() {
        let fam = MarketFamily::custom(|n| FiniteMarket::one_period(&[0.5, 0.5], vec![0.0], vec![vec![n as f64], vec![-(n as f64)]]), 3)
            .unwrap();
        assert!(!fam.is_stationary());
        assert_eq!(fam.market(3).unwrap().gains_basis().column(0), vec![3.0, -3.0]);
        assert!(fam.to_json().is_err());
    }

    #[test]
    fn measure_sequences_validate() {
        let fam = MarketFamily::isolated_arbitrage(0.3, 2).unwrap();
        let seq = MeasureSeq::reference(&fam).unwrap();
        assert!(seq.constant);
        assert!(seq.validate(&fam, 2).is_ok());
        let bad = MeasureSeq::new(vec![DensityVector::new(vec![2.0, 2.0]); 2]);
        assert!(bad.validate(&fam, 2).is_err());
        assert!(seq.validate(&fam, 3).is_err());
    }
}
