//! Inverse extinction, scattering and loss lengths across the emission line,
//! and the diffusive lasing radius they imply.
//!
//!     cargo run --example kinetic_lengths

use coldlase::medium::RegionKind;
use coldlase::spectral::{letokhov_radius, BetaMode, SpectralModel};

fn main() {
    let model = SpectralModel {
        rabi_2v: 30.0,
        gain_kappa: 1e-3,
        beta0: 0.1,
        beta_mode: BetaMode::Lorentzian { width: 2.0 },
        ..SpectralModel::default()
    };

    println!(
        "{:>6} {:>10} {:>10} {:>10}",
        "delta", "l_ex^-1", "l_sc^-1", "l_ls^-1"
    );
    for delta in [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0] {
        let k = model.kinetic_lengths(delta, 1.0, RegionKind::Trap);
        println!(
            "{delta:>6.1} {:>10.5} {:>10.5} {:>10.5}",
            k.l_ex_inv, k.l_sc_inv, k.l_ls_inv
        );
    }

    let channel = model.kinetic_lengths(0.0, 1.0, RegionKind::GainChannel);
    let l_g = channel.gain_length().expect("pumped atoms amplify");
    println!(
        "\ngain channel: l_ex^-1 = {:.3}, gain length {l_g:.4}",
        channel.l_ex_inv
    );
    println!(
        "a diffusive medium with l_tr = 1 needs radius {:.4} to lase at this gain",
        letokhov_radius(1.0, l_g).unwrap()
    );
}
