//! CSV writers for evaluation and analysis results. Reals use 6 decimals.

use std::io::{self, Write};

use super::{CombinationGrid, GateWeightGroups, GroupReport, OverlapMatrix, RankingReport};

fn bound(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.6}")
    }
}

/// `metric,value` rows: `mrr` then `hits@K` for each recorded K.
pub fn write_report<W: Write>(mut w: W, report: &RankingReport) -> io::Result<()> {
    writeln!(w, "metric,value")?;
    writeln!(w, "mrr,{:.6}", report.mrr)?;
    for (k, h) in &report.hits {
        writeln!(w, "hits@{k},{h:.6}")?;
    }
    Ok(())
}

fn write_square<W: Write>(mut w: W, names: &[String], rows: &[Vec<f64>]) -> io::Result<()> {
    writeln!(w, "method,{}", names.join(","))?;
    for (name, row) in names.iter().zip(rows) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{name},{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_overlap<W: Write>(w: W, m: &OverlapMatrix) -> io::Result<()> {
    write_square(w, &m.names, &m.matrix)
}

/// Correct-set sizes; `empty=1` marks entries that rely on Jaccard(∅,∅)=1.
pub fn write_overlap_sets<W: Write>(mut w: W, m: &OverlapMatrix) -> io::Result<()> {
    writeln!(w, "method,k,correct_count,empty")?;
    for (name, &c) in m.names.iter().zip(&m.correct_counts) {
        writeln!(w, "{name},{},{c},{}", m.k, (c == 0) as u8)?;
    }
    Ok(())
}

/// One row per (bin, method); empty bins report `NA` hits.
pub fn write_groups<W: Write>(mut w: W, r: &GroupReport) -> io::Result<()> {
    writeln!(w, "key,bin,lower,upper,count,proportion,method,hits")?;
    for b in 0..r.spec.num_bins() {
        let (lo, hi) = r.spec.bounds(b);
        for (name, hits) in r.methods.iter().zip(&r.hits) {
            let h = hits[b].map_or_else(|| "NA".to_string(), |h| format!("{h:.6}"));
            writeln!(
                w,
                "{},{b},{},{},{},{:.6},{name},{h}",
                r.spec.key,
                bound(lo),
                bound(hi),
                r.counts[b],
                r.proportions[b]
            )?;
        }
    }
    Ok(())
}

pub fn write_grid<W: Write>(w: W, g: &CombinationGrid) -> io::Result<()> {
    write_square(w, &g.names, &g.hits)
}

pub fn write_gate_weights<W: Write>(mut w: W, g: &GateWeightGroups, expert_names: &[String]) -> io::Result<()> {
    writeln!(w, "key,bin,lower,upper,count,{}", expert_names.join(","))?;
    for (b, (mean, &count)) in g.means.iter().zip(&g.counts).enumerate() {
        let (lo, hi) = g.spec.bounds(b);
        let cells: Vec<String> = match mean {
            Some(m) => m.iter().map(|v| format!("{v:.6}")).collect(),
            None => vec!["NA".to_string(); expert_names.len()],
        };
        writeln!(
            w,
            "{},{b},{},{},{count},{}",
            g.spec.key,
            bound(lo),
            bound(hi),
            cells.join(",")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_layout() {
        let r = RankingReport::from_ranks(vec![1.0, 4.0], &[1, 3]);
        let mut out = Vec::new();
        write_report(&mut out, &r).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "metric,value\nmrr,0.625000\nhits@1,0.500000\nhits@3,0.500000\n"
        );
    }
}
