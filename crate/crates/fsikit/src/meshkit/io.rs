//! ASCII mesh file format.
//!
//! ```text
//! fsimesh 1
//! nodes N
//! x y            (N lines)
//! triangles M
//! i j k          (M lines, 0-based)
//! boundary K
//! i j tagname    (K lines)
//! ```
//! `#` starts a comment; blank lines are ignored.

use super::{BoundaryEdge, Mesh2D};
use crate::error::{FsiError, Result};
use std::io::Write;
use std::path::Path;

pub fn load_mesh(path: &Path) -> Result<Mesh2D> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        FsiError::Config(format!("cannot read mesh file '{}': {e}", path.display()))
    })?;
    parse_mesh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if !line.is_empty() {
                return Some((i + 1, line));
            }
        }
        None
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> FsiError {
    FsiError::MeshParse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh2D> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, header) = lines
        .next_content()
        .ok_or_else(|| parse_err(0, "empty mesh file"))?;
    if header != "fsimesh 1" {
        return Err(parse_err(ln, format!("expected 'fsimesh 1', got '{header}'")));
    }

    let expect_count = |lines: &mut Lines, keyword: &str| -> Result<usize> {
        let (ln, line) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, format!("missing '{keyword}' section")))?;
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(num), None) if k == keyword => num
                .parse::<usize>()
                .map_err(|_| parse_err(ln, format!("bad count '{num}'"))),
            _ => Err(parse_err(ln, format!("expected '{keyword} N', got '{line}'"))),
        }
    };

    let n_nodes = expect_count(&mut lines, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let (ln, line) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, format!("missing node line {k}")))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != 2 {
            return Err(parse_err(ln, format!("expected 'x y', got '{line}'")));
        }
        let x = vals[0]
            .parse::<f64>()
            .map_err(|_| parse_err(ln, format!("bad coordinate '{}'", vals[0])))?;
        let y = vals[1]
            .parse::<f64>()
            .map_err(|_| parse_err(ln, format!("bad coordinate '{}'", vals[1])))?;
        nodes.push([x, y]);
    }

    let n_tris = expect_count(&mut lines, "triangles")?;
    let mut triangles = Vec::with_capacity(n_tris);
    for k in 0..n_tris {
        let (ln, line) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, format!("missing triangle line {k}")))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != 3 {
            return Err(parse_err(ln, format!("expected 'i j k', got '{line}'")));
        }
        let mut t = [0usize; 3];
        for (slot, v) in t.iter_mut().zip(&vals) {
            *slot = v
                .parse::<usize>()
                .map_err(|_| parse_err(ln, format!("bad node index '{v}'")))?;
        }
        triangles.push(t);
    }

    let n_edges = expect_count(&mut lines, "boundary")?;
    let mut boundary = Vec::with_capacity(n_edges);
    for k in 0..n_edges {
        let (ln, line) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, format!("missing boundary line {k}")))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != 3 {
            return Err(parse_err(ln, format!("expected 'i j tag', got '{line}'")));
        }
        let a = vals[0]
            .parse::<usize>()
            .map_err(|_| parse_err(ln, format!("bad node index '{}'", vals[0])))?;
        let b = vals[1]
            .parse::<usize>()
            .map_err(|_| parse_err(ln, format!("bad node index '{}'", vals[1])))?;
        boundary.push(BoundaryEdge {
            a,
            b,
            tag: vals[2].to_string(),
        });
    }

    Mesh2D::new(nodes, triangles, boundary)
}

pub fn write_mesh(mesh: &Mesh2D, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "fsimesh 1")?;
    writeln!(f, "nodes {}", mesh.num_nodes())?;
    for p in mesh.nodes() {
        writeln!(f, "{:.17e} {:.17e}", p[0], p[1])?;
    }
    writeln!(f, "triangles {}", mesh.triangles().len())?;
    for t in mesh.triangles() {
        writeln!(f, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(f, "boundary {}", mesh.boundary().len())?;
    for e in mesh.boundary() {
        writeln!(f, "{} {} {}", e.a, e.b, e.tag)?;
    }
    Ok(())
}
