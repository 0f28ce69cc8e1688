//! Plain-text tables for `leadlag report`.

use std::fmt::Write;

use leadlag_core::evaluation::{EvaluationReport, Metrics, ModeReport};

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{:.1}%", 100.0 * x))
}

fn money(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.2}"))
}

fn table(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{title}");
    let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    let _ = writeln!(out, "{}", line(&head));
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
    out.push('\n');
}

fn metric_rows(m: &Metrics) -> Vec<String> {
    vec![
        m.n_trades.to_string(),
        pct(m.win_rate),
        money(m.avg_win),
        money(m.avg_loss),
        format!("{:.2}", m.total_pnl),
    ]
}

pub fn render_evaluation(r: &EvaluationReport) -> String {
    let mut out = String::new();
    let overall: Vec<Vec<String>> = [("Statistical", &r.statistical.overall), ("Hybrid", &r.hybrid.overall)]
        .into_iter()
        .map(|(name, m)| {
            let mut row = vec![name.to_string()];
            row.extend(metric_rows(m));
            row
        })
        .collect();
    table(&mut out, "Overall performance", &["Mode", "Trades", "Win rate", "Avg win", "Avg loss", "Total PnL"], &overall);

    if let Some(rows) = &r.comparison.same_event {
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|e| {
                vec![
                    e.setting.clone(),
                    e.statistical_trades.to_string(),
                    money(e.loss.statistical_avg_loss),
                    e.hybrid_trades.to_string(),
                    money(e.loss.hybrid_avg_loss),
                    pct(e.loss.loss_reduction),
                ]
            })
            .collect();
        table(
            &mut out,
            "Average loss by event setting",
            &["Setting", "Stat trades", "Stat avg loss", "Hyb trades", "Hyb avg loss", "Loss reduction"],
            &rows,
        );
    }

    let rows: Vec<Vec<String>> = r
        .comparison
        .magnitude
        .iter()
        .map(|b| {
            vec![
                b.label.clone(),
                b.statistical_trades.to_string(),
                pct(b.statistical_win_rate),
                b.hybrid_trades.to_string(),
                pct(b.hybrid_win_rate),
            ]
        })
        .collect();
    table(
        &mut out,
        "Win rate by leader move",
        &["Leader move", "Stat trades", "Stat WR", "Hyb trades", "Hyb WR"],
        &rows,
    );

    let rows: Vec<Vec<String>> = r
        .comparison
        .hold_ablation
        .iter()
        .map(|h| {
            vec![
                h.hold_days.to_string(),
                pct(h.statistical_win_rate),
                pct(h.hybrid_win_rate),
                money(h.loss.statistical_avg_loss),
                money(h.loss.hybrid_avg_loss),
                pct(h.loss.loss_reduction),
                format!("{}/{}", h.statistical_skipped, h.hybrid_skipped),
            ]
        })
        .collect();
    table(
        &mut out,
        "Hold period ablation",
        &["Hold days", "Stat WR", "Hyb WR", "Stat avg loss", "Hyb avg loss", "Loss reduction", "Skipped"],
        &rows,
    );
    let failures = r.hybrid.scoring_failures.len();
    let _ = writeln!(
        out,
        "{} windows, {} skipped trades (stat), {} skipped trades (hybrid), {} scoring failures",
        r.statistical.windows.len(),
        r.statistical.skips.len(),
        r.hybrid.skips.len(),
        failures
    );
    out
}

pub fn render_mode(r: &ModeReport) -> String {
    let mut out = String::new();
    let mut rows: Vec<Vec<String>> = r
        .windows
        .iter()
        .map(|w| {
            let mut row = vec![format!("{} ({}..{})", w.window.window_id, w.window.test_start, w.window.test_end)];
            row.extend(metric_rows(&w.metrics));
            row
        })
        .collect();
    let mut total = vec!["overall".to_string()];
    total.extend(metric_rows(&r.overall));
    rows.push(total);
    table(&mut out, "Performance by test window", &["Window", "Trades", "Win rate", "Avg win", "Avg loss", "Total PnL"], &rows);

    if let Some(split) = &r.breakdowns.same_event {
        let rows: Vec<Vec<String>> = [("same", &split.same), ("different", &split.different)]
            .into_iter()
            .map(|(name, m)| vec![name.to_string(), m.n_trades.to_string(), money(m.avg_loss)])
            .collect();
        table(&mut out, "Average loss by event setting", &["Setting", "Trades", "Avg loss"], &rows);
    }
    let rows: Vec<Vec<String>> = r
        .breakdowns
        .magnitude
        .iter()
        .map(|b| vec![b.label.clone(), b.metrics.n_trades.to_string(), pct(b.metrics.win_rate)])
        .collect();
    table(&mut out, "Win rate by leader move", &["Leader move", "Trades", "Win rate"], &rows);
    let rows: Vec<Vec<String>> = r
        .hold_ablation
        .iter()
        .map(|h| {
            vec![
                h.hold_days.to_string(),
                h.metrics.n_trades.to_string(),
                pct(h.metrics.win_rate),
                money(h.metrics.avg_loss),
                h.n_skipped.to_string(),
            ]
        })
        .collect();
    table(&mut out, "Hold period ablation", &["Hold days", "Trades", "Win rate", "Avg loss", "Skipped"], &rows);
    out
}
