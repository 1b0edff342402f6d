use super::{sort_by_logprob, Hypothesis};
use crate::error::{Error, Result};
use crate::model::{CondModel, SourceId, TokenId};

/// Largest space [`brute_force`] agrees to enumerate.
pub const DEFAULT_ORACLE_CAP: u128 = 10_000_000;

/// Enumerates every complete sequence and returns the best `limit` (or all
/// when `None`), ranked like every other decoder.
pub fn brute_force(model: &CondModel, source: SourceId, limit: Option<usize>) -> Result<Vec<Hypothesis>> {
    brute_force_capped(model, source, limit, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_capped(
    model: &CondModel,
    source: SourceId,
    limit: Option<usize>,
    cap: u128,
) -> Result<Vec<Hypothesis>> {
    let size = model.space_size();
    if size > cap {
        return Err(Error::SpaceTooLarge { size, cap });
    }
    let mut all = Vec::with_capacity(size as usize);
    let mut prefix = Vec::with_capacity(model.max_len() + 1);
    enumerate(model, source, &mut prefix, 0.0, &mut all)?;
    sort_by_logprob(&mut all);
    if let Some(k) = limit {
        all.truncate(k);
    }
    Ok(all)
}

fn enumerate(
    model: &CondModel,
    source: SourceId,
    prefix: &mut Vec<TokenId>,
    logprob: f64,
    out: &mut Vec<Hypothesis>,
) -> Result<()> {
    let eos = model.eos();
    let row = model.next_logprobs(source, prefix)?;
    let forced = prefix.len() == model.max_len();
    let mut tokens = prefix.clone();
    tokens.push(eos);
    out.push(Hypothesis {
        tokens,
        logprob: logprob + row[eos as usize],
        forced_eos: forced,
    });
    if forced {
        return Ok(());
    }
    for v in (0..model.vocab_size() as TokenId).filter(|&v| v != eos) {
        prefix.push(v);
        let res = enumerate(model, source, prefix, logprob + row[v as usize], out);
        prefix.pop();
        res?;
    }
    Ok(())
}
