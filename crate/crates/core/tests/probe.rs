// Temporary measurement probe; not part of the suite.

use deltadg::dg::DgTables;
use deltadg::diagnostics::{self};
use deltadg::runner::{self, RunConfig, Scheme};

#[test]
#[ignore]
fn own_node_magnitudes() {
    for case in ["hydro1d", "moving1d"] {
        for order in [3usize, 4] {
            let mut cfg = RunConfig::for_case(case);
            cfg.set_scheme(Scheme::parse(&format!("DG{order}")).unwrap());
            cfg.n = 64;
            cfg.t_final = Some(10.0);
            let out = runner::run_single(&cfg).unwrap();
            assert!(out.failure.is_none());
            let own = DgTables::new(out.field.deg).unwrap();
            let dim = out.mesh.dim;
            let reference = {
                let eq = out.equilibrium.clone();
                move |x: [f64; 2]| deltadg::field::pack_vars(dim, eq.conserved_at(x))
            };
            let e_own =
                diagnostics::l1_error(&out.field, &out.mesh, &own, None, &reference).unwrap();
            println!(
                "{case} DG{order} deg={} fine_rho={:.6e} own_rho={:.6e}",
                out.field.deg, out.errors[0], e_own[0]
            );
        }
    }
}
