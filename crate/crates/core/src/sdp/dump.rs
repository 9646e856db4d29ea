//! Line-oriented text dump of an [`SdpProblem`].
//!
//! ```text
//! sdp 1
//! blocks 5 1 1
//! free 1
//! objective ; 1:1:1:0.5 ; f1:-1
//! c 2 ; 1:1:1:1 1:1:2:1 ; f1:1
//! ```
//!
//! Each `c` line is one constraint: right-hand side, then block triplets
//! `block:i:j:value` (1-based, one per symmetric entry), then free-variable
//! coefficients `f<k>:value`. Sections are separated by `;`.

use super::{BlockEntries, Constraint, Objective, SdpProblem};
use crate::error::{Error, Result};

fn write_terms(blocks: &[BlockEntries], free: &[(usize, f64)]) -> String {
    let b: Vec<String> = blocks
        .iter()
        .flat_map(|be| {
            be.entries
                .iter()
                .map(move |&(i, j, v)| format!("{}:{}:{}:{:e}", be.block + 1, i + 1, j + 1, v))
        })
        .collect();
    let f: Vec<String> = free.iter().map(|&(k, v)| format!("f{}:{:e}", k + 1, v)).collect();
    format!("{} ; {}", b.join(" "), f.join(" "))
}

pub fn write_dump(p: &SdpProblem) -> String {
    let mut out = String::from("sdp 1\n");
    let sizes: Vec<String> = p.block_sizes.iter().map(ToString::to_string).collect();
    out.push_str(&format!("blocks {}\n", sizes.join(" ")));
    out.push_str(&format!("free {}\n", p.free_vars));
    out.push_str(&format!("objective ; {}\n", write_terms(&p.objective.blocks, &p.objective.free)));
    for c in &p.constraints {
        out.push_str(&format!("c {:e} ; {}\n", c.rhs, write_terms(&c.blocks, &c.free)));
    }
    out
}

fn parse_terms(line: usize, blocks: &str, free: &str) -> Result<(Vec<BlockEntries>, Vec<(usize, f64)>)> {
    let mut out: Vec<BlockEntries> = Vec::new();
    for tok in blocks.split_whitespace() {
        let parts: Vec<&str> = tok.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::parse(line, format!("bad block triplet '{tok}'")));
        }
        let idx = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .map(|v| v - 1)
                .ok_or_else(|| Error::parse(line, format!("bad index in '{tok}'")))
        };
        let (b, i, j) = (idx(parts[0])?, idx(parts[1])?, idx(parts[2])?);
        let v: f64 = parts[3]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad value in '{tok}'")))?;
        match out.last_mut() {
            Some(last) if last.block == b => last.entries.push((i, j, v)),
            _ => out.push(BlockEntries {
                block: b,
                entries: vec![(i, j, v)],
            }),
        }
    }
    let mut fr = Vec::new();
    for tok in free.split_whitespace() {
        let (k, v) = tok
            .strip_prefix('f')
            .and_then(|t| t.split_once(':'))
            .ok_or_else(|| Error::parse(line, format!("bad free term '{tok}'")))?;
        let k: usize = k
            .parse::<usize>()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::parse(line, format!("bad free index in '{tok}'")))?;
        let v: f64 = v.parse().map_err(|_| Error::parse(line, format!("bad value in '{tok}'")))?;
        fr.push((k - 1, v));
    }
    Ok((out, fr))
}

pub fn parse_dump(text: &str) -> Result<SdpProblem> {
    let mut p = SdpProblem::default();
    let mut seen_header = false;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (head, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match head {
            "sdp" => seen_header = true,
            "blocks" => {
                p.block_sizes = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::parse(line, format!("bad block size '{t}'"))))
                    .collect::<Result<_>>()?;
            }
            "free" => {
                p.free_vars = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line, "bad free-variable count"))?;
            }
            "objective" | "c" => {
                let sections: Vec<&str> = rest.split(';').collect();
                if sections.len() != 3 {
                    return Err(Error::parse(line, "expected three ';'-separated sections"));
                }
                let (blocks, free) = parse_terms(line, sections[1], sections[2])?;
                if head == "objective" {
                    p.objective = Objective { blocks, free };
                } else {
                    let rhs = sections[0]
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(line, "bad right-hand side"))?;
                    p.constraints.push(Constraint { blocks, free, rhs });
                }
            }
            other => return Err(Error::parse(line, format!("unknown record '{other}'"))),
        }
    }
    if !seen_header {
        return Err(Error::parse(1, "missing 'sdp 1' header"));
    }
    p.validate()?;
    Ok(p)
}
