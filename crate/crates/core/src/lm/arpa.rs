use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::{Entry, LmError, NGramModel, WordId, MAX_ORDER};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// log10 probability given to `<unk>` when an ARPA file does not list it.
const MISSING_UNK_LOG10: f64 = -100.0;

/// Reads an ARPA model from bytes; gzip input is detected by its magic bytes.
pub fn load_arpa(bytes: &[u8]) -> Result<NGramModel, LmError> {
    if bytes.starts_with(&GZIP_MAGIC) {
        let mut text = String::new();
        GzDecoder::new(bytes).read_to_string(&mut text)?;
        return parse(&text);
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|e| LmError::MalformedHeader(format!("not UTF-8: {e}")))?;
    parse(text)
}

pub fn load_arpa_file(path: impl AsRef<Path>) -> Result<NGramModel, LmError> {
    load_arpa(&std::fs::read(path)?)
}

fn parse(text: &str) -> Result<NGramModel, LmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let header_line = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| LmError::MalformedHeader("empty file".into()))?;
    if header_line.1 != "\\data\\" {
        return Err(LmError::MalformedHeader(format!(
            "expected \\data\\, found {:?}",
            header_line.1
        )));
    }

    let mut declared: Vec<usize> = Vec::new();
    let mut section = None;
    for (_, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("ngram ") {
            let (n, count) = rest
                .split_once('=')
                .ok_or_else(|| LmError::MalformedHeader(format!("bad count line {line:?}")))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| LmError::MalformedHeader(format!("bad order in {line:?}")))?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| LmError::MalformedHeader(format!("bad count in {line:?}")))?;
            if n != declared.len() + 1 {
                return Err(LmError::MalformedHeader(format!(
                    "ngram counts out of order at {line:?}"
                )));
            }
            declared.push(count);
        } else {
            section = Some(line);
            break;
        }
    }
    let order = declared.len();
    if order == 0 || order > MAX_ORDER {
        return Err(LmError::MalformedHeader(format!(
            "model order {order} is outside 1..={MAX_ORDER}"
        )));
    }

    let mut model = NGramModel::with_order(order)?;
    let mut rows: Vec<Vec<(Vec<WordId>, Entry)>> = vec![Vec::new(); order];
    let mut current = section;
    let mut seen_end = false;
    while let Some(head) = current.take() {
        if head == "\\end\\" {
            seen_end = true;
            break;
        }
        let n = head
            .strip_prefix('\\')
            .and_then(|s| s.strip_suffix("-grams:"))
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| (1..=order).contains(&n))
            .ok_or_else(|| LmError::MalformedHeader(format!("unexpected section {head:?}")))?;
        for (lineno, line) in lines.by_ref() {
            if line.is_empty() {
                continue;
            }
            if line.starts_with('\\') {
                current = Some(line);
                break;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |message: String| LmError::MalformedLine {
                line: lineno,
                message,
            };
            if fields.len() != n + 1 && fields.len() != n + 2 {
                return Err(bad(format!("expected {} or {} fields", n + 1, n + 2)));
            }
            let log10_prob: f64 = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad probability {:?}", fields[0])))?;
            let log10_backoff: f64 = match fields.get(n + 1) {
                Some(b) => b.parse().map_err(|_| bad(format!("bad back-off {b:?}")))?,
                None => 0.0,
            };
            let ids = fields[1..=n].iter().map(|w| model.intern(w)).collect();
            rows[n - 1].push((ids, Entry { log10_prob, log10_backoff }));
        }
    }
    if !seen_end {
        return Err(LmError::MalformedHeader("missing \\end\\".into()));
    }

    for (i, r) in rows.iter().enumerate() {
        if r.len() != declared[i] {
            return Err(LmError::CountMismatch {
                order: i + 1,
                declared: declared[i],
                actual: r.len(),
            });
        }
    }
    for r in rows.iter() {
        for (ids, e) in r {
            model.insert(ids, *e);
        }
    }
    if model.get(&[model.unk()]).is_none() {
        model.insert(
            &[model.unk()],
            Entry {
                log10_prob: MISSING_UNK_LOG10,
                log10_backoff: 0.0,
            },
        );
    }

    let name = |m: &NGramModel, ids: &[WordId]| {
        ids.iter().map(|&w| m.word(w)).collect::<Vec<_>>().join(" ")
    };
    for n in 1..=order {
        for (ids, _) in &rows[n - 1] {
            if n > 1 {
                if model.get(&ids[..n - 1]).is_none() {
                    return Err(LmError::MissingBackoff {
                        ngram: name(&model, ids),
                    });
                }
                if model.get(&ids[1..]).is_none() {
                    return Err(LmError::MissingSuffix {
                        ngram: name(&model, ids),
                    });
                }
            }
        }
    }
    for w in [model.bos(), model.eos()] {
        if model.get(&[w]).is_none() {
            return Err(LmError::MalformedHeader(format!(
                "unigram section lacks {}",
                model.word(w)
            )));
        }
    }
    Ok(model)
}

/// Writes the model as ARPA text, each section sorted by its words.
pub fn save_arpa(model: &NGramModel) -> String {
    let mut out = String::from("\\data\\\n");
    for n in 1..=model.order() {
        let _ = writeln!(out, "ngram {n}={}", model.ngram_count(n));
    }
    for n in 1..=model.order() {
        let _ = write!(out, "\n\\{n}-grams:\n");
        let mut rows: Vec<(Vec<&str>, &Entry)> = model
            .table(n)
            .iter()
            .map(|(k, e)| (k.ids(n).iter().map(|&w| model.word(w)).collect(), e))
            .collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for (words, e) in rows {
            let _ = write!(out, "{:.7}\t{}", e.log10_prob, words.join(" "));
            if n < model.order() {
                let _ = write!(out, "\t{:.7}", e.log10_backoff);
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}
