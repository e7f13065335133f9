//! CSV input files and atomic output.
//!
//! All readers take the file content plus a label used in error messages;
//! errors carry 1-based line numbers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::decision::{DecisionProblem, Prior};
use crate::error::{Error, Result};
use crate::scenarios::{DailySeries, PortfolioBook, ReturnPanel};

struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn parse_error(file: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn read_table(text: &str, file: &str, first_column: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(r)) => r.iter().map(str::to_string).collect::<Vec<_>>(),
        Some(Err(e)) => return Err(parse_error(file, 1, e.to_string())),
        None => return Err(parse_error(file, 1, "file is empty")),
    };
    if header.first().map(|h| h.trim_start_matches('\u{feff}')) != Some(first_column) {
        return Err(parse_error(
            file,
            1,
            format!("header must start with `{first_column}`"),
        ));
    }
    if header.len() < 2 {
        return Err(parse_error(
            file,
            1,
            "header needs at least one value column",
        ));
    }
    let mut header = header;
    header[0] = first_column.to_string();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(file, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(parse_error(
                file,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

fn parse_number(file: &str, line: u64, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| {
        parse_error(
            file,
            line,
            format!("column `{column}`: `{raw}` is not a number"),
        )
    })?;
    if !v.is_finite() {
        return Err(parse_error(
            file,
            line,
            format!("column `{column}`: non-finite value"),
        ));
    }
    Ok(v)
}

fn numeric_rows(table: &Table, file: &str) -> Result<Vec<(u64, String, Vec<f64>)>> {
    table
        .rows
        .iter()
        .map(|(line, fields)| {
            let values = fields[1..]
                .iter()
                .zip(&table.header[1..])
                .map(|(raw, col)| parse_number(file, *line, col, raw))
                .collect::<Result<Vec<_>>>()?;
            Ok((*line, fields[0].clone(), values))
        })
        .collect()
}

fn check_unique(names: &[(u64, &str)], file: &str, what: &str) -> Result<()> {
    for (i, (line, name)) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(parse_error(file, *line, format!("empty {what} name")));
        }
        if names[..i].iter().any(|(_, n)| n == name) {
            return Err(parse_error(
                file,
                *line,
                format!("duplicate {what} `{name}`"),
            ));
        }
    }
    Ok(())
}

/// `act,<state1>,...,<stateM>`.
pub fn parse_utilities(text: &str, file: &str) -> Result<DecisionProblem> {
    let table = read_table(text, file, "act")?;
    let rows = numeric_rows(&table, file)?;
    if rows.is_empty() {
        return Err(parse_error(file, 2, "no acts"));
    }
    check_unique(
        &rows
            .iter()
            .map(|(l, n, _)| (*l, n.as_str()))
            .collect::<Vec<_>>(),
        file,
        "act",
    )?;
    let states = table.header[1..].to_vec();
    let (acts, utilities) = rows.into_iter().map(|(_, n, v)| (n, v)).unzip();
    DecisionProblem::new(acts, states, utilities)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorTable {
    pub states: Vec<String>,
    pub priors: Vec<Prior>,
}

impl PriorTable {
    pub fn get(&self, name: &str) -> Result<&Prior> {
        self.priors
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownPrior(name.to_string()))
    }

    /// Fail unless the state labels match the problem's, in order.
    pub fn check_states(&self, problem: &DecisionProblem) -> Result<()> {
        if self.states != problem.states() {
            return Err(Error::Inconsistent(format!(
                "prior states [{}] do not match utility states [{}]",
                self.states.join(", "),
                problem.states().join(", ")
            )));
        }
        Ok(())
    }
}

/// `prior,<state1>,...,<stateM>`; each row sums to 1 ± 1e-9.
pub fn parse_priors(text: &str, file: &str) -> Result<PriorTable> {
    let table = read_table(text, file, "prior")?;
    let rows = numeric_rows(&table, file)?;
    if rows.is_empty() {
        return Err(parse_error(file, 2, "no priors"));
    }
    check_unique(
        &rows
            .iter()
            .map(|(l, n, _)| (*l, n.as_str()))
            .collect::<Vec<_>>(),
        file,
        "prior",
    )?;
    let priors = rows
        .into_iter()
        .map(|(line, name, mass)| {
            Prior::new(name, mass).map_err(|e| parse_error(file, line, e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok(PriorTable {
        states: table.header[1..].to_vec(),
        priors,
    })
}

/// `act,cost`; costs ≥ 0. Returns `(act, cost)` in file order.
pub fn parse_costs(text: &str, file: &str) -> Result<Vec<(String, f64)>> {
    let table = read_table(text, file, "act")?;
    if table.header.len() != 2 || table.header[1] != "cost" {
        return Err(parse_error(file, 1, "header must be `act,cost`"));
    }
    numeric_rows(&table, file)?
        .into_iter()
        .map(|(line, act, v)| {
            if v[0] < 0.0 {
                Err(parse_error(
                    file,
                    line,
                    format!("cost of `{act}` is negative"),
                ))
            } else {
                Ok((act, v[0]))
            }
        })
        .collect()
}

fn valid_month(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 7
        && b[4] == b'-'
        && b[..4].iter().chain(&b[5..]).all(u8::is_ascii_digit)
        && matches!(s[5..].parse::<u32>(), Ok(1..=12))
}

fn valid_day(s: &str) -> bool {
    s.len() == 10
        && valid_month(&s[..7])
        && s.as_bytes()[7] == b'-'
        && matches!(s[8..].parse::<u32>(), Ok(1..=31))
}

/// `date,<ASSET1>,...,<ASSETK>[,market_vol]`; dates `YYYY-MM`.
///
/// Months with empty cells are collected and reported together.
pub fn parse_monthly(text: &str, file: &str) -> Result<ReturnPanel> {
    let table = read_table(text, file, "date")?;
    let has_vol = table.header.last().map(String::as_str) == Some("market_vol");
    let n_assets = table.header.len() - 1 - usize::from(has_vol);
    if n_assets == 0 {
        return Err(parse_error(file, 1, "no asset columns"));
    }
    let assets = table.header[1..=n_assets].to_vec();
    let mut months = Vec::new();
    let mut returns = Vec::new();
    let mut vol = Vec::new();
    let mut missing = Vec::new();
    for (line, fields) in &table.rows {
        let month = &fields[0];
        if !valid_month(month) {
            return Err(parse_error(
                file,
                *line,
                format!("date `{month}` is not YYYY-MM"),
            ));
        }
        if months.last().is_some_and(|prev: &String| prev >= month) {
            return Err(parse_error(
                file,
                *line,
                format!("month `{month}` is not after the previous row"),
            ));
        }
        if fields[1..].iter().any(String::is_empty) {
            missing.push(month.clone());
        } else {
            let values = fields[1..]
                .iter()
                .zip(&table.header[1..])
                .map(|(raw, col)| parse_number(file, *line, col, raw))
                .collect::<Result<Vec<_>>>()?;
            if has_vol {
                vol.push(values[n_assets]);
            }
            returns.push(values[..n_assets].to_vec());
        }
        months.push(month.clone());
    }
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{file}: missing asset returns in months {}",
            missing.join(", ")
        )));
    }
    if months.is_empty() {
        return Err(parse_error(file, 2, "no months"));
    }
    ReturnPanel::new(months, assets, returns, has_vol.then_some(vol))
}

/// `date,<MARKET>`; dates `YYYY-MM-DD`.
pub fn parse_daily(text: &str, file: &str) -> Result<DailySeries> {
    let table = read_table(text, file, "date")?;
    if table.header.len() != 2 {
        return Err(parse_error(file, 1, "header must be `date,<MARKET>`"));
    }
    let mut dates = Vec::new();
    let mut returns = Vec::new();
    for (line, day, v) in numeric_rows(&table, file)? {
        if !valid_day(&day) {
            return Err(parse_error(
                file,
                line,
                format!("date `{day}` is not YYYY-MM-DD"),
            ));
        }
        dates.push(day);
        returns.push(v[0]);
    }
    Ok(DailySeries {
        asset: table.header[1].clone(),
        dates,
        returns,
    })
}

/// `portfolio,<ASSET1>,...`; rows sum to 1 ± 1e-9.
pub fn parse_weights(text: &str, file: &str) -> Result<PortfolioBook> {
    let table = read_table(text, file, "portfolio")?;
    let rows = numeric_rows(&table, file)?;
    if rows.is_empty() {
        return Err(parse_error(file, 2, "no portfolios"));
    }
    check_unique(
        &rows
            .iter()
            .map(|(l, n, _)| (*l, n.as_str()))
            .collect::<Vec<_>>(),
        file,
        "portfolio",
    )?;
    for (line, name, w) in &rows {
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 || w.iter().any(|x| *x < 0.0) {
            return Err(parse_error(
                file,
                *line,
                format!("weights of `{name}` must be nonnegative and sum to 1 (sum {total})"),
            ));
        }
    }
    let assets = table.header[1..].to_vec();
    let (names, weights) = rows.into_iter().map(|(_, n, w)| (n, w)).unzip();
    PortfolioBook::new(names, assets, weights)
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Utilities in the input format, with round-trip exact numbers.
pub fn utilities_csv(problem: &DecisionProblem) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["act".to_string()];
    header.extend(problem.states().iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (act, row) in problem.acts().iter().zip(problem.utilities()) {
        let mut rec = vec![act.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Format with 9 significant digits, `%g` style.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

/// Write via a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
