use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{ItemId, Skill};
use crate::runner::{AttemptRecord, EpisodeLog, ItemOutcome, Policy, TerminalStatus};

pub const LEDGER_COLUMNS: [&str; 13] = [
    "run_id",
    "plate_id",
    "item_id",
    "label",
    "attempt_index",
    "skill",
    "success",
    "gated_softness",
    "gated_moisture",
    "gated_viscosity",
    "belief_entropy_pre",
    "belief_entropy_post",
    "seed",
];

fn opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Writes one row per attempt, in log order. Fields a policy does not
/// produce are left empty.
pub fn write_ledger<W: Write>(logs: &[EpisodeLog], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(LEDGER_COLUMNS)?;
    for log in logs {
        for a in &log.attempts {
            let refined = a.psi_max.is_some();
            let gate = |i: usize| if refined { a.gated[i].to_string() } else { String::new() };
            out.write_record([
                log.run_id.clone(),
                a.plate_id.clone(),
                a.item_id.0.to_string(),
                a.label.clone(),
                a.attempt_index.to_string(),
                a.skill.to_string(),
                a.success.to_string(),
                gate(0),
                gate(1),
                gate(2),
                opt(a.entropy_pre),
                opt(a.entropy_post),
                log.seed.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn field(row: &csv::StringRecord, i: usize, line: usize) -> Result<&str> {
    row.get(i).ok_or_else(|| Error::Parse(format!("ledger line {line}: missing column {}", LEDGER_COLUMNS[i])))
}

fn parse<T: std::str::FromStr>(text: &str, column: usize, line: usize) -> Result<T> {
    text.parse()
        .map_err(|_| Error::Parse(format!("ledger line {line}: bad {} `{text}`", LEDGER_COLUMNS[column])))
}

fn parse_opt<T: std::str::FromStr>(text: &str, column: usize, line: usize) -> Result<Option<T>> {
    if text.is_empty() {
        Ok(None)
    } else {
        parse(text, column, line).map(Some)
    }
}

/// Rebuilds episode logs from a ledger. Digests and belief maxima are not
/// stored and come back empty; item outcomes are recovered from the rows.
pub fn read_ledger<R: Read>(reader: R) -> Result<Vec<EpisodeLog>> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    if header.iter().ne(LEDGER_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!("unexpected ledger header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut logs: Vec<EpisodeLog> = Vec::new();
    for (n, row) in input.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let run_id = field(&row, 0, line)?;
        let seed: u64 = parse(field(&row, 12, line)?, 12, line)?;
        let gated: [Option<bool>; 3] = [
            parse_opt(field(&row, 7, line)?, 7, line)?,
            parse_opt(field(&row, 8, line)?, 8, line)?,
            parse_opt(field(&row, 9, line)?, 9, line)?,
        ];
        let record = AttemptRecord {
            plate_id: field(&row, 1, line)?.to_string(),
            item_id: ItemId(parse(field(&row, 2, line)?, 2, line)?),
            label: field(&row, 3, line)?.to_string(),
            attempt_index: parse(field(&row, 4, line)?, 4, line)?,
            skill: field(&row, 5, line)?.parse::<Skill>()?,
            success: parse(field(&row, 6, line)?, 6, line)?,
            psi_max: None,
            gated: gated.map(|g| g.unwrap_or(false)),
            entropy_pre: parse_opt(field(&row, 10, line)?, 10, line)?,
            entropy_post: parse_opt(field(&row, 11, line)?, 11, line)?,
        };
        if logs.last().is_none_or(|l| l.run_id != run_id) {
            if logs.iter().any(|l| l.run_id == run_id) {
                return Err(Error::Parse(format!("ledger line {line}: rows of run `{run_id}` are not contiguous")));
            }
            let mut parts = run_id.split(':');
            let (Some(policy), Some(_), Some(seed_index), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::Parse(format!("ledger line {line}: malformed run_id `{run_id}`")));
            };
            logs.push(EpisodeLog {
                run_id: run_id.to_string(),
                policy: policy.parse::<Policy>()?,
                plate_id: record.plate_id.clone(),
                seed_index: parse(seed_index, 0, line)?,
                seed,
                config_digest: String::new(),
                plate_digest: String::new(),
                attempts: Vec::new(),
                items: Vec::new(),
            });
        }
        logs.last_mut().expect("pushed above").attempts.push(record);
    }
    for log in &mut logs {
        let mut items: BTreeMap<ItemId, ItemOutcome> = BTreeMap::new();
        let mut order = Vec::new();
        for a in &log.attempts {
            let item = items.entry(a.item_id).or_insert_with(|| {
                order.push(a.item_id);
                ItemOutcome { item_id: a.item_id, label: a.label.clone(), status: TerminalStatus::RemovedFailed, attempts: 0 }
            });
            item.attempts = item.attempts.max(a.attempt_index);
            if a.acquired() {
                item.status = TerminalStatus::Acquired;
            }
        }
        log.items = order.into_iter().map(|id| items.remove(&id).expect("inserted above")).collect();
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::compute_metrics;

    fn log() -> EpisodeLog {
        let record = |item: u32, attempt_index: u32, skill, success, refined: bool| AttemptRecord {
            plate_id: "p1".into(),
            item_id: ItemId(item),
            label: "tofu".into(),
            attempt_index,
            skill,
            success,
            psi_max: refined.then_some([-0.1, -0.5, -2.0]),
            gated: [true, true, false],
            entropy_pre: refined.then_some(1.25),
            entropy_post: refined.then_some(0.5),
        };
        EpisodeLog {
            run_id: "savor:p1:4".into(),
            policy: Policy::Savor,
            plate_id: "p1".into(),
            seed_index: 4,
            seed: 77,
            config_digest: String::new(),
            plate_digest: String::new(),
            attempts: vec![
                record(0, 1, Skill::Skewer, false, true),
                record(0, 2, Skill::Scoop, true, true),
                record(1, 1, Skill::Push, true, true),
                record(1, 2, Skill::Skewer, false, true),
                record(1, 3, Skill::Skewer, false, true),
            ],
            items: vec![
                ItemOutcome { item_id: ItemId(0), label: "tofu".into(), status: TerminalStatus::Acquired, attempts: 2 },
                ItemOutcome { item_id: ItemId(1), label: "tofu".into(), status: TerminalStatus::RemovedFailed, attempts: 3 },
            ],
        }
    }

    #[test]
    fn round_trip_keeps_metrics() {
        let original = log();
        let mut buf = Vec::new();
        write_ledger(std::slice::from_ref(&original), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&LEDGER_COLUMNS.join(",")));
        assert_eq!(text.lines().count(), 6);
        let back = read_ledger(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].items, original.items);
        assert_eq!(back[0].seed_index, 4);
        assert_eq!(compute_metrics(&back).unwrap(), compute_metrics(&[original]).unwrap());
    }

    #[test]
    fn unrefined_rows_have_empty_fields() {
        let mut l = log();
        l.policy = Policy::Random;
        l.run_id = "random:p1:4".into();
        for a in &mut l.attempts {
            a.psi_max = None;
            a.entropy_pre = None;
            a.entropy_post = None;
        }
        let mut buf = Vec::new();
        write_ledger(&[l], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",false,,,,,,77"));
    }

    #[test]
    fn bad_input_rejected() {
        assert!(read_ledger("a,b\n1,2\n".as_bytes()).is_err());
        let header = LEDGER_COLUMNS.join(",");
        let bad = format!("{header}\nsavor:p1,p1,0,tofu,1,skewer,true,,,,,,1\n");
        assert!(read_ledger(bad.as_bytes()).is_err());
        let bad_skill = format!("{header}\nsavor:p1:0,p1,0,tofu,1,fork,true,,,,,,1\n");
        assert!(read_ledger(bad_skill.as_bytes()).is_err());
    }
}
