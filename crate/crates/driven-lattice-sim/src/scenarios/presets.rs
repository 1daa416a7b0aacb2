//! Named scenario presets. Preset names are part of the CLI contract.

/// Preset names in listing order.
pub const PRESET_NAMES: [&str; 8] = [
    "fig1_static",
    "fig2_offres_weak",
    "fig3_offres_strong",
    "fig4_resonant",
    "fig5_current",
    "validate_gauge",
    "validate_sbe",
    "validate_adiabatic",
];

/// One-line description per preset for `sim list-presets`.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1_static" => "slowly ramped static field (1 V/m), population dynamics in all three bases",
        "fig2_offres_weak" => "off-resonant weak pulse (0.1 eV, 1 MV/cm, 100 fs), virtual-excitation shapes",
        "fig3_offres_strong" => "off-resonant strong pulse (0.1 eV, 100 fs, E0 explicit), tunneling injection",
        "fig4_resonant" => "resonant pulse (1.55 eV, 0.01 MV/cm, 100 fs), real photocarrier injection",
        "fig5_current" => "master equation DC-current comparison across reference bases plus the bare Schrödinger run",
        "validate_gauge" => "velocity- vs length-gauge Houston populations on a 16-point grid",
        "validate_sbe" => "Houston-basis master equation against the semiconductor Bloch equations",
        "validate_adiabatic" => "polarized-Houston drift scaling under a halved, slowed static ramp",
        _ => return None,
    })
}

/// Default configuration text for a preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1_static" => {
            "[field]\n\
             kind = static\n\
             Edc_Vpm = 1\n\
             Tdc_fs = 20\n\
             [grid]\n\
             N_k = 512\n\
             dt_au = 0.1\n\
             t_end_fs = 60\n\
             [engine]\n\
             kind = tdse\n\
             [output]\n\
             stride_fs = 2\n"
        }
        "fig2_offres_weak" => {
            "[field]\n\
             kind = pulse\n\
             E0_MVcm = 1\n\
             omega0_eV = 0.1\n\
             Tpulse_fs = 100\n\
             [grid]\n\
             N_k = 512\n\
             dt_au = 0.1\n\
             t_end_fs = 100\n\
             [engine]\n\
             kind = tdse\n\
             [output]\n\
             stride_fs = 1\n"
        }
        // The peak field is deliberately not defaulted: the quoted strong-field
        // amplitude (4 MV/m) sits below the weak case and reads as a unit slip
        // for 4 MV/cm; `sim validate` supplies 4 MV/cm.
        "fig3_offres_strong" => {
            "[field]\n\
             kind = pulse\n\
             omega0_eV = 0.1\n\
             Tpulse_fs = 100\n\
             [grid]\n\
             N_k = 512\n\
             dt_au = 0.1\n\
             t_end_fs = 100\n\
             [engine]\n\
             kind = tdse\n\
             [output]\n\
             stride_fs = 0.25\n"
        }
        "fig4_resonant" => {
            "[field]\n\
             kind = pulse\n\
             E0_MVcm = 0.01\n\
             omega0_eV = 1.55\n\
             Tpulse_fs = 100\n\
             [grid]\n\
             N_k = 512\n\
             dt_au = 0.1\n\
             t_end_fs = 100\n\
             [engine]\n\
             kind = tdse\n\
             [output]\n\
             stride_fs = 1\n"
        }
        "fig5_current" => {
            "[field]\n\
             kind = static\n\
             Edc_Vpm = 1\n\
             Tdc_fs = 20\n\
             [grid]\n\
             N_k = 512\n\
             dt_au = 0.1\n\
             t_end_fs = 60\n\
             [engine]\n\
             kind = master\n\
             compare_references = true\n\
             [relaxation]\n\
             T1_fs = 20\n\
             T2_fs = 20\n\
             [output]\n\
             stride_fs = 0.5\n"
        }
        "validate_gauge" => {
            "[field]\n\
             kind = pulse\n\
             E0_MVcm = 1\n\
             omega0_eV = 0.1\n\
             Tpulse_fs = 100\n\
             [grid]\n\
             N_k = 16\n\
             dt_au = 0.01\n\
             t_end_fs = 100\n\
             [engine]\n\
             kind = tdse\n\
             [output]\n\
             stride_fs = 2\n"
        }
        // The nominal field here is far above the 1 V/m of the static-field
        // figure: at 1 V/m the two propagation routes agree to rounding noise
        // and the grid-convergence study cannot resolve anything. The check
        // itself re-derives a grid-aligned Edc so the advected solution lands
        // exactly on grid points at the comparison time.
        "validate_sbe" => {
            "[field]\n\
             kind = static\n\
             Edc_Vpm = 1e7\n\
             Tdc_fs = 20\n\
             [grid]\n\
             N_k = 512\n\
             dt_au = 0.1\n\
             t_end_fs = 40\n\
             [engine]\n\
             kind = sbe\n\
             [relaxation]\n\
             T1_fs = 20\n\
             T2_fs = 20\n\
             [output]\n\
             stride_fs = 2\n"
        }
        // Field raised from the figure's 1 V/m for the same measurability
        // reason; the scaling law being checked is field-strength independent.
        "validate_adiabatic" => {
            "[field]\n\
             kind = static\n\
             Edc_Vpm = 1e7\n\
             Tdc_fs = 20\n\
             [grid]\n\
             N_k = 128\n\
             dt_au = 0.1\n\
             t_end_fs = 60\n\
             [engine]\n\
             kind = tdse\n\
             [output]\n\
             stride_fs = 0.5\n"
        }
        _ => return None,
    })
}

/// Extra overrides applied by `sim validate` (and the acceptance suite) when
/// a preset leaves a value open.
pub fn validation_overrides(name: &str) -> &'static [&'static str] {
    match name {
        "fig3_offres_strong" => &["field.E0_MVcm=4"],
        _ => &[],
    }
}
