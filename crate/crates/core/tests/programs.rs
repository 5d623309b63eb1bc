use samplecraft::program::{evaluate_program, parse, parse_for_dim, LossContext, PointExpr};
use samplecraft::Sampler;

#[test]
fn three_term_program_is_the_sum_of_its_terms() {
    let program = parse_for_dim("bn(s) + bn(proj(0, s)) + discrepancy(s)", 3).unwrap();
    assert_eq!(program.terms.len(), 3);
    assert!(matches!(program.terms[1].expr, PointExpr::Proj(ref dims, _) if dims == &vec![0]));
    assert_eq!(program.to_string(), "bn(s) + bn(proj(0, s)) + disc(s)");

    let mut ctx = LossContext::new();
    ctx.redraw(&program, 3, 21).unwrap();
    let batch: Vec<_> = (0..3).map(|s| Sampler::Random.generate(125, 3, s).unwrap()).collect();
    let total = evaluate_program(&program, &batch, &ctx).unwrap();

    let mut parts = 0.0;
    for text in ["bn(s)", "bn(proj(0, s))", "disc(s)"] {
        let single = parse_for_dim(text, 3).unwrap();
        let mut single_ctx = LossContext::new();
        single_ctx.redraw(&single, 3, 21).unwrap();
        parts += evaluate_program(&single, &batch, &single_ctx).unwrap();
    }
    assert!((total - parts).abs() <= 1e-12 * parts.abs().max(1.0), "{total} vs {parts}");
}

#[test]
fn operator_outermost_forms_are_rejected() {
    for text in ["proj(bn(s))", "prog(disc(s))", "grid(0, bn(s))"] {
        assert!(parse(text).is_err(), "{text}");
    }
}

#[test]
fn program_weights_scale_the_loss() {
    let batch: Vec<_> = (0..2).map(|s| Sampler::Jittered.generate(64, 2, s).unwrap()).collect();
    let ctx = LossContext::new();
    let one = evaluate_program(&parse("bn(s)").unwrap(), &batch, &ctx).unwrap();
    let scaled = evaluate_program(&parse("0.25*bn(s)").unwrap(), &batch, &ctx).unwrap();
    assert_eq!(scaled, 0.25 * one);
}
