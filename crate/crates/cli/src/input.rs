use ftaplab::largemarket::{MarketFamily, MeasureSeq};
use ftaplab::market::FiniteMarket;
use ftaplab::orlicz::{parse_young, YoungFunction};
use ftaplab::{DensityVector, Error, FiniteProbSpace, Result};
use std::io::Read;
use std::path::{Path, PathBuf};

pub fn young(spec: &str) -> Result<YoungFunction> {
    parse_young(spec)
}

pub fn market(path: &Path) -> Result<FiniteMarket> {
    FiniteMarket::load(path)
}

pub fn family(path: Option<&PathBuf>, prefix: Option<usize>) -> Result<MarketFamily> {
    let fam = match path {
        Some(p) if p.as_os_str() != "-" => MarketFamily::load(p)?,
        _ => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Error::InvalidInput(format!("cannot read standard input: {e}")))?;
            MarketFamily::from_json(&text, None)?
        }
    };
    match prefix {
        Some(0) => Err(Error::InvalidInput("prefix must be at least 1".into())),
        Some(n) => fam.with_prefix(n),
        None => Ok(fam),
    }
}

pub fn measures(path: &Path) -> Result<MeasureSeq> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("malformed measure file {}: {e}", path.display())))
}

pub fn space(probs: Option<&Vec<f64>>, len: usize) -> Result<FiniteProbSpace> {
    match probs {
        Some(p) if p.len() != len => Err(Error::InvalidInput(format!("{} probabilities for {len} atoms", p.len()))),
        Some(p) => FiniteProbSpace::from_probs(p),
        None if len == 0 => Err(Error::InvalidInput("empty vector".into())),
        None => FiniteProbSpace::uniform(len),
    }
}

/// Numbers per leaf, or leaf ids whose indicator is meant.
pub fn claim(m: &FiniteMarket, items: &[String]) -> Result<Vec<f64>> {
    let labels = m.space().labels();
    if items.is_empty() {
        return Err(Error::InvalidInput("empty claim".into()));
    }
    if let Ok(values) = items.iter().map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>() {
        m.space().check_len(&values)?;
        return Ok(values);
    }
    let mut w = vec![0.0; labels.len()];
    for id in items {
        let i = m
            .space()
            .index_of(id.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown leaf id '{id}'")))?;
        w[i] = 1.0;
    }
    Ok(w)
}

pub fn density(m: &FiniteMarket, r: Option<&Vec<f64>>) -> Result<DensityVector> {
    match r {
        None => Ok(DensityVector::ones(m.num_leaves())),
        Some(v) => {
            let d = DensityVector::new(v.clone());
            m.space().check_len(&d.values)?;
            d.validate_probability(m.space())?;
            Ok(d)
        }
    }
}
