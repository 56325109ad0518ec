//! CSV exports of roadmaps and query paths.

use std::io::Write;

use super::{PathVertex, QueryResult, Roadmap};
use crate::error::Result;

fn coord_header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

/// `index,x0,..,x{d-1}` for every vertex.
pub fn write_vertices_csv<W: Write>(rm: &Roadmap, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["index".to_string()];
    header.extend(coord_header(rm.dim()));
    out.write_record(&header)?;
    for i in 0..rm.len() {
        let mut rec = vec![i.to_string()];
        rec.extend(rm.vertex(i).iter().map(|x| x.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// `u,v,weight` for every undirected edge, `u < v`.
pub fn write_edges_csv<W: Write>(rm: &Roadmap, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["u", "v", "weight"])?;
    for (u, v, wt) in rm.edges() {
        out.write_record([u.to_string(), v.to_string(), wt.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// `step,vertex,x0,..` for a solved path; the header alone when unsolved.
pub fn write_path_csv<W: Write>(res: &QueryResult, dim: usize, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["step".to_string(), "vertex".to_string()];
    header.extend(coord_header(dim));
    out.write_record(&header)?;
    for (step, (v, q)) in res.vertices.iter().zip(&res.path).enumerate() {
        let label = match v {
            PathVertex::Start => "start".to_string(),
            PathVertex::Goal => "goal".to_string(),
            PathVertex::Roadmap(i) => i.to_string(),
        };
        let mut rec = vec![step.to_string(), label];
        rec.extend(q.iter().map(|x| x.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
