use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Column {
    pub name: &'static str,
    /// One of `float`, `int`, `text`, `bool`.
    pub kind: &'static str,
    pub description: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

/// 17 significant digits in exponent form; locale independent.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// `;`-joined floats.
pub fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(";")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// `(ε, orbit)` ordering key.
    pub key: (f64, usize),
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: &'static [Column],
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn new(columns: &'static [Column]) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, eps: f64, id: usize, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        self.rows.push(Row { key: (eps, id), cells });
    }

    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.key.0.total_cmp(&b.key.0).then(a.key.1.cmp(&b.key.1)));
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.iter().map(|c| c.name).collect::<Vec<_>>().join(",");
        out.push('\n');
        for r in &self.rows {
            out += &r.cells.iter().map(Cell::render).collect::<Vec<_>>().join(",");
            out.push('\n');
        }
        out
    }

    /// Float values of a column, skipping non-float cells.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.columns.iter().position(|c| c.name == name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match r.cells[j] {
                Cell::Float(x) => Some(x),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COLS: &[Column] = &[
        Column { name: "eps", kind: "float", description: "" },
        Column { name: "label", kind: "text", description: "" },
    ];

    #[test]
    fn csv_is_sorted_and_pinned() {
        let mut t = ResultTable::new(COLS);
        t.push(0.2, 0, vec![Cell::Float(0.2), Cell::Text("b".into())]);
        t.push(0.1, 1, vec![Cell::Float(0.1), Cell::Text("a,\"x\"".into())]);
        t.push(0.1, 0, vec![Cell::Float(0.1), Cell::Empty]);
        t.sort();
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "eps,label\n1.0000000000000001e-1,\n1.0000000000000001e-1,\"a,\"\"x\"\"\"\n2.0000000000000001e-1,b\n"
        );
        assert_eq!(t.floats("eps"), vec![0.1, 0.1, 0.2]);
        assert_eq!(format_float(f64::NAN), "nan");
    }
}
