//! `n=<int>` followed by one `<bits> -> <bits>` row per state.

use super::{content_lines, ParseError};
use crate::bits::{State, MAX_DIM};
use crate::network::Network;

pub fn parse_network_table(text: &str) -> Result<Network, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| ParseError::new(1, 0, "empty input, expected `n=<int>`"))?;
    let dim = parse_header(header).map_err(|m| ParseError::new(hline, 0, m))?;

    let mut table: Vec<Option<(u32, usize)>> = vec![None; 1 << dim];
    let mut last_line = hline;
    for (ln, line) in lines {
        last_line = ln;
        let Some((lhs, rhs)) = line.split_once("->") else {
            return Err(ParseError::new(ln, 0, format!("expected `<bits> -> <bits>`, found `{line}`")));
        };
        let from = row_bits(lhs, dim).map_err(|m| ParseError::new(ln, 1, m))?;
        let col = line.find("->").expect("split above") + 3 + (rhs.len() - rhs.trim_start().len());
        let to = row_bits(rhs, dim).map_err(|m| ParseError::new(ln, col, m))?;
        let slot = &mut table[from.bits() as usize];
        if let Some((_, first)) = slot {
            return Err(ParseError::new(ln, 1, format!("duplicate state {from} (first given on line {first})")));
        }
        *slot = Some((to.bits(), ln));
    }
    if let Some(missing) = table.iter().position(Option::is_none) {
        let state = State::from_raw(dim, missing as u32);
        return Err(ParseError::new(last_line, 0, format!("missing state {state}")));
    }
    let rows = table.into_iter().map(|r| r.expect("checked total").0).collect();
    Network::new(dim, rows).map_err(|e| ParseError::new(hline, 0, e.to_string()))
}

fn parse_header(header: &str) -> Result<usize, String> {
    let value = header
        .strip_prefix('n')
        .map(str::trim_start)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| format!("expected `n=<int>`, found `{header}`"))?
        .trim();
    let dim: usize = value.parse().map_err(|_| format!("bad dimension `{value}`"))?;
    if dim == 0 || dim > MAX_DIM {
        return Err(format!("bad dimension {dim}: must be between 1 and {MAX_DIM}"));
    }
    Ok(dim)
}

fn row_bits(text: &str, dim: usize) -> Result<State, String> {
    let s: State = text.trim().parse()?;
    if s.dim() != dim {
        return Err(format!("`{}` has {} bits, expected {dim}", text.trim(), s.dim()));
    }
    Ok(s)
}

/// The canonical text form, rows in increasing state order.
pub fn render_network_table(net: &Network) -> String {
    let mut out = format!("n={}\n", net.dim());
    for mu in net.states() {
        let img = net.image(mu).expect("own state");
        out.push_str(&format!("{mu} -> {img}\n"));
    }
    out
}
