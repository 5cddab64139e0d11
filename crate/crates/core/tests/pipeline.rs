use moyal::ermakov::classical_trajectory;
use moyal::invariant::{auto_grid, wigner_xi_pi, InvariantSpec};
use moyal::models::{build_model, ModelPreset};
use moyal::starexp::evolve_wigner;
use moyal::symbols::io::{read_symbol, write_symbol, Format};
use moyal::symbols::{GridSymbol, PhaseGrid};
use moyal::verify::coherent_wigner;

fn centroid(w: &GridSymbol) -> (f64, f64) {
    let g = w.grid();
    let (mut m, mut mx, mut mp) = (0.0, 0.0, 0.0);
    for i in 0..g.n_x {
        for j in 0..g.n_p {
            let v = w.at(i, j).re;
            m += v;
            mx += v * g.x(i);
            mp += v * g.p(j);
        }
    }
    (mx / m, mp / m)
}

#[test]
fn coherent_state_follows_the_classical_trajectory() {
    let model = build_model(&ModelPreset::caldirola_kanai()).unwrap();
    let spec = InvariantSpec::solve(&model, 0.0, 4.0, 1e-12, 0.25).unwrap();
    let ctx = spec.ctx;
    let (x0, p0) = (0.9, -0.4);
    let (xi0, pi0) = spec.xi_pi_of_xp(x0, p0, 0.0).unwrap();
    let l = 4.0;
    let grid = PhaseGrid::new(128, 128, l, ctx.omega_cap * l).unwrap();
    let w0 = coherent_wigner(&grid, xi0, pi0, &ctx);
    let traj = classical_trajectory(&model, x0, p0 / model.m(0.0), 0.0, 4.0, 1e-12).unwrap();
    for t in [0.5, 1.7, 3.9] {
        let w = evolve_wigner(&w0, spec.sol.tau(t).unwrap(), &ctx).unwrap();
        let (x, p) = traj.phase_point(t).unwrap();
        let (xi, pi) = spec.xi_pi_of_xp(x, p, t).unwrap();
        let (cx, cp) = centroid(&w);
        assert!((cx - xi).abs() < 1e-8 && (cp - pi).abs() < 1e-8, "t={t}: ({cx}, {cp}) vs ({xi}, {pi})");
    }
}

#[test]
fn wigner_functions_round_trip_through_files() {
    let model = build_model(&ModelPreset::sho()).unwrap();
    let spec = InvariantSpec::solve(&model, 0.0, 1.0, 1e-10, 1.0).unwrap();
    let w = wigner_xi_pi(3, &spec.ctx, &auto_grid(3, &spec.ctx).unwrap()).unwrap();
    for format in [Format::Csv, Format::Json] {
        let mut buf = Vec::new();
        write_symbol(&w, format, &mut buf).unwrap();
        let back = read_symbol(format, buf.as_slice()).unwrap();
        assert!(back.grid().same_as(w.grid()));
        assert_eq!(back.values(), w.values(), "{format:?}");
    }
}
