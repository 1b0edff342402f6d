use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Hypothesis;
use crate::error::{Error, Result};
use crate::model::{CondModel, SourceId, TokenId};

/// Draws `n` independent sequences token by token from the model's
/// conditionals. A prefix that reaches `max_len` is closed with EOS.
pub fn ancestral_sample(model: &CondModel, source: SourceId, n: usize, seed: u64) -> Result<Vec<Hypothesis>> {
    if n < 1 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eos = model.eos();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tokens: Vec<TokenId> = Vec::new();
        let mut logprob = 0.0;
        loop {
            let logs = model.next_logprobs(source, &tokens)?;
            let forced = tokens.len() == model.max_len();
            let tok = if forced {
                eos
            } else {
                roulette(model.next_probs(source, &tokens)?, rng.random::<f64>())
            };
            logprob += logs[tok as usize];
            tokens.push(tok);
            if tok == eos {
                out.push(Hypothesis {
                    tokens,
                    logprob,
                    forced_eos: forced,
                });
                break;
            }
        }
    }
    Ok(out)
}

/// Index whose cumulative-probability interval contains `u * total`.
fn roulette(probs: &[f64], u: f64) -> TokenId {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if target < acc {
                return i as TokenId;
            }
        }
    }
    last_positive as TokenId
}
