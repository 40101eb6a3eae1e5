use felab::runner::report::*;

#[test]
fn table_csv() {
    let mut t = Table::new("x", &["a", "b"]);
    t.push(vec!["1".into(), "2".into()]);
    assert_eq!(t.to_csv(), "a,b\n1,2\n");
}

#[test]
fn svg_is_well_formed_enough() {
    let p = Plot {
        name: "p".into(),
        title: "a < b".into(),
        x_label: "t".into(),
        y_label: "y".into(),
        log_y: true,
        lines: vec![
            PlotLine::new("data", vec![0.0, 1.0, 2.0], vec![1.0, 0.1, 0.0]),
            PlotLine::new("fit", vec![0.0, 2.0], vec![1.0, 0.01]).dashed(),
        ],
    };
    let s = p.to_svg();
    assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    assert!(s.contains("a &lt; b"));
    assert_eq!(s.matches("<polyline").count(), 2);
    assert!(!s.contains("NaN") && !s.contains("inf"));
}
