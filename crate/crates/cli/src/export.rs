use std::fmt::Write as _;

use conjugen::GridSpec;

use crate::artifact::CellRecord;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn sci(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// One row per cell; empty fields where a cell has no value.
pub fn csv(grid: &GridSpec, k: usize, cells: &[CellRecord]) -> String {
    let n = grid.dim();
    let mut cols: Vec<String> = Vec::new();
    cols.extend((1..=n).map(|d| format!("i{d}")));
    cols.extend((1..=n).map(|d| format!("x{d}")));
    for j in 1..=k {
        cols.push(format!("phi{j}_re"));
        cols.push(format!("phi{j}_im"));
    }
    cols.extend(["residual", "iters", "f", "g", "status"].map(String::from));
    let mut out = cols.join(",");
    out.push('\n');
    for cell in cells {
        let mut row: Vec<String> = cell.index.iter().map(|i| i.to_string()).collect();
        row.extend(cell.x.iter().map(|x| x.to_string()));
        match &cell.phi {
            Some(phi) => row.extend(phi.iter().flat_map(|p| [sci(Some(p[0])), sci(Some(p[1]))])),
            None => row.extend(std::iter::repeat_n(String::new(), 2 * k)),
        }
        row.push(sci(cell.residual));
        row.push(opt(cell.iters));
        row.push(sci(cell.h.map(|h| h[0])));
        row.push(sci(cell.h.map(|h| h[1])));
        let status = match (&cell.failure, cell.h) {
            (Some(f), _) => serde_json::to_value(f.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            (None, None) => "unreached".to_string(),
            (None, Some(_)) => "ok".to_string(),
        };
        row.push(status);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `x1 x2 f g` blocks, one per combination of the remaining axis indices,
/// separated by two blank lines. Cells without `h` are skipped.
pub fn plotdata(grid: &GridSpec, cells: &[CellRecord]) -> String {
    let n = grid.dim();
    let mut out = String::new();
    let (n0, n1) = (grid.axes()[0].count, grid.axes()[1].count);
    let slices = grid.len() / (n0 * n1);
    for s in 0..slices {
        // `s` enumerates axes 2.. in row-major order
        let mut rest = vec![0; n.saturating_sub(2)];
        let mut r = s;
        for d in (2..n).rev() {
            rest[d - 2] = r % grid.axes()[d].count;
            r /= grid.axes()[d].count;
        }
        if s > 0 {
            out.push_str("\n\n");
        }
        let fixed: Vec<String> =
            rest.iter().enumerate().map(|(j, &i)| format!("x{}={}", j + 3, grid.axes()[j + 2].coord(i))).collect();
        let _ = writeln!(out, "# x1 x2 f g{}{}", if fixed.is_empty() { "" } else { " at " }, fixed.join(" "));
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let mut idx = vec![i0, i1];
                idx.extend(&rest);
                let cell = &cells[grid.flat(&idx)];
                if let Some(h) = cell.h {
                    let _ = writeln!(out, "{} {} {:e} {:e}", cell.x[0], cell.x[1], h[0], h[1]);
                }
            }
            out.push('\n');
        }
    }
    out
}
