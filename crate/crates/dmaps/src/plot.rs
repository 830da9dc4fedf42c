//! Gnuplot scripts that redraw the experiment figures from the CSV tables.
//!
//! Every table starts with a provenance row and a header row, so the scripts
//! skip two lines and select series with `strcol` filters.

use std::fmt::Write;

fn preamble(out: &mut String, terminal_file: &str) {
    out.push_str("set datafile separator ','\n");
    out.push_str("set terminal pngcairo size 900,640\n");
    let _ = writeln!(out, "set output '{terminal_file}'");
    out.push_str("set grid\nset key outside right\n");
}

fn is_sinkhorn(name: &str) -> bool {
    name == "sinkhorn"
}

/// Log-log eigenvalue bias against `eps`: solid for Sinkhorn, dashed for
/// standard weights; one colour per eigenvalue index.
pub fn bias_script(csv: &str, normalizations: &[String], indices: &[usize]) -> String {
    let mut s = String::new();
    preamble(&mut s, "bias_sweep.png");
    s.push_str("set logscale xy\nset format xy '10^{%L}'\n");
    s.push_str("set xlabel 'epsilon'\nset ylabel '|lambda_{k,eps} - lambda_k|'\n");
    let mut series = Vec::new();
    for norm in normalizations {
        let dash = if is_sinkhorn(norm) { 1 } else { 2 };
        for (c, &k) in indices.iter().enumerate() {
            series.push(format!(
                "'{csv}' every ::2 using 2:(strcol(5) eq '{norm}' && $1 == {k} ? $6 : 1/0) \
                 with linespoints lc {} dt {dash} title '{norm}, k={k}'",
                c + 1
            ));
        }
    }
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

/// Two panels: mean eigenspace error against `M_eff` at each `eps`, and
/// against `eps` at each `M`.
pub fn variance_script(summary_csv: &str, normalizations: &[String], eps: &[f64], ms: &[usize]) -> String {
    let mut s = String::new();
    preamble(&mut s, "variance_sweep.png");
    s.push_str("set multiplot layout 2,1\nset logscale xy\n");
    s.push_str("set xlabel 'M_eff = M eps^{d/2}'\nset ylabel 'mean L^2 eigenspace error'\n");
    // columns: normalization, eps, M, m_eff, trials, var_mean, var_median, total_mean, total_median
    let mut top = Vec::new();
    for norm in normalizations {
        let dash = if is_sinkhorn(norm) { 1 } else { 2 };
        for (c, e) in eps.iter().enumerate() {
            top.push(format!(
                "'{summary_csv}' every ::2 using 4:(strcol(1) eq '{norm}' && strcol(2) eq '{e}' ? $6 : 1/0) \
                 with linespoints lc {} dt {dash} title '{norm}, eps={e}'",
                c + 1
            ));
        }
    }
    let _ = writeln!(s, "plot {}", top.join(", \\\n     "));
    s.push_str("set xlabel 'epsilon'\nset ylabel 'mean total eigenspace error'\n");
    let mut bottom = Vec::new();
    for norm in normalizations {
        let dash = if is_sinkhorn(norm) { 1 } else { 2 };
        for (c, m) in ms.iter().enumerate() {
            bottom.push(format!(
                "'{summary_csv}' every ::2 using 2:(strcol(1) eq '{norm}' && $3 == {m} ? $8 : 1/0) \
                 with linespoints lc {} dt {dash} title '{norm}, M={m}'",
                c + 1
            ));
        }
    }
    let _ = writeln!(s, "plot {}", bottom.join(", \\\n     "));
    s.push_str("unset multiplot\n");
    s
}

/// Semi-log residual traces of both Sinkhorn solvers.
pub fn trace_script(csv: &str, tol: f64) -> String {
    let mut s = String::new();
    preamble(&mut s, "assa_trace.png");
    s.push_str("set logscale y\nset format y '10^{%L}'\n");
    s.push_str("set xlabel 'iteration'\nset ylabel '||u (K u) - 1||_inf'\n");
    let _ = writeln!(s, "set arrow from graph 0, first {tol} to graph 1, first {tol} nohead dt 3");
    let _ = writeln!(
        s,
        "plot '{csv}' every ::2 using 1:2 with lines lw 2 title 'plain Sinkhorn', \\\n     \
         '{csv}' every ::2 using 1:3 with lines lw 2 title 'ASSA'"
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_script_has_a_series_per_pair() {
        let s = bias_script("b.csv", &["standard:0.5".into(), "sinkhorn".into()], &[1, 2]);
        assert_eq!(s.matches("linespoints").count(), 4);
        assert!(s.contains("dt 2 title 'standard:0.5, k=1'"));
        assert!(s.contains("dt 1 title 'sinkhorn, k=2'"));
    }

    #[test]
    fn variance_script_has_two_panels() {
        let s = variance_script("v.csv", &["sinkhorn".into()], &[0.05], &[250, 1000]);
        assert_eq!(s.lines().filter(|l| l.starts_with("plot ")).count(), 2);
        assert!(s.contains("M=1000"));
    }
}
