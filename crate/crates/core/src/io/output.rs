//! Chain files (JSON lines) and posterior summaries.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{Draw, EpochDraw, PosteriorChain, Summary};
use crate::error::{Error, Result};
use crate::measures::ItemId;

pub const CHAIN_FORMAT: &str = "plrank-chain";
pub const CHAIN_VERSION: u32 = 1;
pub const UNSEEN_LABEL: &str = "__unseen__";

/// First line of a chain file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainHeader {
    pub format: String,
    pub version: u32,
    pub model: String,
    /// Item labels, in the order of each draw's weights.
    pub items: Vec<String>,
    pub epochs: Vec<String>,
    pub active: Vec<Vec<bool>>,
    pub chains: usize,
    pub phi_acceptance: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DrawLine {
    chain: usize,
    alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    epochs: Vec<EpochDraw>,
}

/// A header describing `chains`, whose items are labelled through `label`.
pub fn chain_header(
    model: &str,
    chains: &[PosteriorChain],
    epochs: Vec<String>,
    label: impl Fn(ItemId) -> String,
) -> Result<ChainHeader> {
    let first = chains.first().ok_or_else(|| Error::Chain("no chains".into()))?;
    Ok(ChainHeader {
        format: CHAIN_FORMAT.into(),
        version: CHAIN_VERSION,
        model: model.into(),
        items: first.items.iter().map(|&id| label(id)).collect(),
        epochs,
        active: first.active.clone(),
        chains: chains.len(),
        phi_acceptance: chains.iter().map(|c| c.phi_acceptance).collect(),
    })
}

pub fn write_chains(path: &Path, header: &ChainHeader, chains: &[PosteriorChain]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    writeln!(w)?;
    for (i, c) in chains.iter().enumerate() {
        for d in &c.draws {
            let line = DrawLine {
                chain: i,
                alpha: d.alpha,
                phi: d.phi,
                epochs: d.epochs.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a chain file back; items get `ItemId(i)` for the `i`-th label.
pub fn read_chains(path: &Path) -> Result<(ChainHeader, Vec<PosteriorChain>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().ok_or_else(|| Error::Chain(format!("{}: empty file", path.display())))??;
    let header: ChainHeader =
        serde_json::from_str(&first).map_err(|e| Error::Chain(format!("{}:1: bad header: {e}", path.display())))?;
    if header.format != CHAIN_FORMAT || header.version != CHAIN_VERSION {
        return Err(Error::Chain(format!(
            "{}: unsupported format {} v{}",
            path.display(),
            header.format,
            header.version
        )));
    }
    if header.active.len() != header.epochs.len() || header.active.iter().any(|a| a.len() != header.items.len()) {
        return Err(Error::Chain(format!("{}: header shapes disagree", path.display())));
    }
    let items: Vec<ItemId> = (0..header.items.len() as u64).map(ItemId).collect();
    let mut chains: Vec<PosteriorChain> = (0..header.chains)
        .map(|i| {
            let mut c = PosteriorChain::new(items.clone(), header.active.clone());
            c.phi_acceptance = header.phi_acceptance.get(i).copied().flatten();
            c
        })
        .collect();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        let d: DrawLine = serde_json::from_str(&line)
            .map_err(|e| Error::Chain(format!("{}:{lineno}: {e}", path.display())))?;
        let ok = d.chain < chains.len()
            && d.epochs.len() == header.epochs.len()
            && d.epochs.iter().all(|e| e.weights.len() == header.items.len());
        if !ok {
            return Err(Error::Chain(format!("{}:{lineno}: draw does not match header", path.display())));
        }
        chains[d.chain].draws.push(Draw {
            alpha: d.alpha,
            phi: d.phi,
            epochs: d.epochs,
        });
    }
    Ok((header, chains))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochPosterior {
    pub epoch: String,
    /// Posterior mean probability that the next top item is new.
    pub new_item_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub model: String,
    pub chains: usize,
    pub draws: usize,
    pub alpha: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_acceptance: Option<f64>,
    pub epochs: Vec<EpochPosterior>,
}

/// Writes the per-epoch normalised-weight summary CSV and the posterior
/// JSON for the pooled chains.
pub fn write_summaries(header: &ChainHeader, chains: &[PosteriorChain], summary: &Path, posterior: &Path) -> Result<()> {
    let pooled = PosteriorChain::pooled(chains)?;
    if pooled.is_empty() {
        return Err(Error::Chain("no draws recorded".into()));
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(summary)?));
    w.write_record(["epoch", "item", "mean", "q025", "q975"])?;
    let mut epochs = Vec::with_capacity(header.epochs.len());
    for (t, epoch) in header.epochs.iter().enumerate() {
        let (items, unseen) = pooled.summarize_epoch(t)?;
        for (k, s) in items.iter().enumerate() {
            if pooled.active[t][k] {
                write_row(&mut w, epoch, &header.items[k], s)?;
            }
        }
        write_row(&mut w, epoch, UNSEEN_LABEL, &unseen)?;
        epochs.push(EpochPosterior {
            epoch: epoch.clone(),
            new_item_probability: unseen.mean,
        });
    }
    w.flush()?;
    let phis = pooled.phi_samples();
    let post = PosteriorSummary {
        model: header.model.clone(),
        chains: chains.len(),
        draws: pooled.len(),
        alpha: Summary::of(&pooled.alpha_samples()),
        phi: (!phis.is_empty()).then(|| Summary::of(&phis)),
        phi_acceptance: pooled.phi_acceptance,
        epochs,
    };
    let mut f = BufWriter::new(File::create(posterior)?);
    serde_json::to_writer_pretty(&mut f, &post)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, epoch: &str, item: &str, s: &Summary) -> Result<()> {
    w.write_record([epoch, item, &s.mean.to_string(), &s.q025.to_string(), &s.q975.to_string()])?;
    Ok(())
}
