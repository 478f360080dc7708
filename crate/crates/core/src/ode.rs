//! Adaptive Dormand–Prince 8(5,3) integration with order-7 dense output,
//! after Hairer's DOP853.
//!
//! The right-hand side is fallible so chart guards (singularity, alignment)
//! abort an integration with their own error rather than poisoning the state.

use nalgebra::SVector;

use crate::error::{Result, RodError};

/// Tolerances and limits for one integration.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|.
    pub max_step: f64,
    /// Prepare interpolation coefficients on every accepted step.
    pub dense_output: bool,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_step: f64::INFINITY,
            dense_output: true,
            max_steps: 200_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rtol < 1e-14 {
            return Err(RodError::InvalidParameter(format!(
                "rtol must be at least 1e-14, got {}",
                self.rtol
            )));
        }
        if self.atol <= 0.0 {
            return Err(RodError::InvalidParameter("atol must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(RodError::InvalidParameter("max_step must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

/// Evaluation counts of one integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegratorStats {
    pub evals: usize,
    pub accepted: usize,
    pub rejected: usize,
}

// Butcher tableau (Hairer, Nørsett & Wanner, dop853).
const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const A141: f64 = 5.61675022830479523392909219681E-2;
const A147: f64 = 2.53500210216624811088794765333E-1;
const A148: f64 = -2.46239037470802489917441475441E-1;
const A149: f64 = -1.24191423263816360469010140626E-1;
const A1410: f64 = 1.5329179827876569731206322685E-1;
const A1411: f64 = 8.20105229563468988491666602057E-3;
const A1412: f64 = 7.56789766054569976138603589584E-3;
const A1413: f64 = -8.298E-3;
const A151: f64 = 3.18346481635021405060768473261E-2;
const A156: f64 = 2.83009096723667755288322961402E-2;
const A157: f64 = 5.35419883074385676223797384372E-2;
const A158: f64 = -5.49237485713909884646569340306E-2;
const A1511: f64 = -1.08347328697249322858509316994E-4;
const A1512: f64 = 3.82571090835658412954920192323E-4;
const A1513: f64 = -3.40465008687404560802977114492E-4;
const A1514: f64 = 1.41312443674632500278074618366E-1;
const A161: f64 = -4.28896301583791923408573538692E-1;
const A166: f64 = -4.69762141536116384314449447206E0;
const A167: f64 = 7.68342119606259904184240953878E0;
const A168: f64 = 4.06898981839711007970213554331E0;
const A169: f64 = 3.56727187455281109270669543021E-1;
const A1613: f64 = -1.39902416515901462129418009734E-3;
const A1614: f64 = 2.9475147891527723389556272149E0;
const A1615: f64 = -9.15095847217987001081870187138E0;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;
const C14: f64 = 0.1E+00;
const C15: f64 = 0.2E+00;
const C16: f64 = 0.777777777777777777777777777778E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

const D41: f64 = -0.84289382761090128651353491142E+01;
const D46: f64 = 0.56671495351937776962531783590E+00;
const D47: f64 = -0.30689499459498916912797304727E+01;
const D48: f64 = 0.23846676565120698287728149680E+01;
const D49: f64 = 0.21170345824450282767155149946E+01;
const D410: f64 = -0.87139158377797299206789907490E+00;
const D411: f64 = 0.22404374302607882758541771650E+01;
const D412: f64 = 0.63157877876946881815570249290E+00;
const D413: f64 = -0.88990336451333310820698117400E-01;
const D414: f64 = 0.18148505520854727256656404962E+02;
const D415: f64 = -0.91946323924783554000451984436E+01;
const D416: f64 = -0.44360363875948939664310572000E+01;

const D51: f64 = 0.10427508642579134603413151009E+02;
const D56: f64 = 0.24228349177525818288430175319E+03;
const D57: f64 = 0.16520045171727028198505394887E+03;
const D58: f64 = -0.37454675472269020279518312152E+03;
const D59: f64 = -0.22113666853125306036270938578E+02;
const D510: f64 = 0.77334326684722638389603898808E+01;
const D511: f64 = -0.30674084731089398182061213626E+02;
const D512: f64 = -0.93321305264302278729567221706E+01;
const D513: f64 = 0.15697238121770843886131091075E+02;
const D514: f64 = -0.31139403219565177677282850411E+02;
const D515: f64 = -0.93529243588444783865713862664E+01;
const D516: f64 = 0.35816841486394083752465898540E+02;

const D61: f64 = 0.19985053242002433820987653617E+02;
const D66: f64 = -0.38703730874935176555105901742E+03;
const D67: f64 = -0.18917813819516756882830838328E+03;
const D68: f64 = 0.52780815920542364900561016686E+03;
const D69: f64 = -0.11573902539959630126141871134E+02;
const D610: f64 = 0.68812326946963000169666922661E+01;
const D611: f64 = -0.10006050966910838403183860980E+01;
const D612: f64 = 0.77771377980534432092869265740E+00;
const D613: f64 = -0.27782057523535084065932004339E+01;
const D614: f64 = -0.60196695231264120758267380846E+02;
const D615: f64 = 0.84320405506677161018159903784E+02;
const D616: f64 = 0.11992291136182789328035130030E+02;

const D71: f64 = -0.25693933462703749003312586129E+02;
const D76: f64 = -0.15418974869023643374053993627E+03;
const D77: f64 = -0.23152937917604549567536039109E+03;
const D78: f64 = 0.35763911791061412378285349910E+03;
const D79: f64 = 0.93405324183624310003907691704E+02;
const D710: f64 = -0.37458323136451633156875139351E+02;
const D711: f64 = 0.10409964950896230045147246184E+03;
const D712: f64 = 0.29840293426660503123344363579E+02;
const D713: f64 = -0.43533456590011143754432175058E+02;
const D714: f64 = 0.96324553959188282948394950600E+02;
const D715: f64 = -0.39177261675615439165231486172E+02;
const D716: f64 = -0.14972683625798562581422125276E+03;

const SAFE: f64 = 0.9;
const FAC1: f64 = 1.0 / 3.0;
const FAC2: f64 = 6.0;
const EXPO1: f64 = 1.0 / 8.0;

/// One-step Dormand–Prince 8(5,3) driver with dense output.
pub struct Dop853<F, const N: usize>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    f: F,
    cfg: IntegratorConfig,
    t: f64,
    y: SVector<f64, N>,
    /// Derivative at (t, y).
    k1: SVector<f64, N>,
    h: f64,
    direction: f64,
    t_old: f64,
    y_old: SVector<f64, N>,
    h_old: f64,
    cont: [SVector<f64, N>; 8],
    dense_ready: bool,
    facold: f64,
    pub stats: IntegratorStats,
}

impl<F, const N: usize> Dop853<F, N>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    pub fn new(mut f: F, t0: f64, y0: SVector<f64, N>, cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let k1 = f(t0, &y0)?;
        Ok(Self {
            f,
            cfg: *cfg,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            direction: 1.0,
            t_old: t0,
            y_old: y0,
            h_old: 0.0,
            cont: [SVector::zeros(); 8],
            dense_ready: false,
            facold: 1e-4,
            stats: IntegratorStats { evals: 1, ..Default::default() },
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &SVector<f64, N> {
        &self.y
    }

    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    pub fn y_old(&self) -> &SVector<f64, N> {
        &self.y_old
    }

    pub fn dydt(&self) -> &SVector<f64, N> {
        &self.k1
    }

    /// Overwrites the current state (projection hooks); re-evaluates the
    /// derivative there.
    pub fn replace_state(&mut self, y: SVector<f64, N>) -> Result<()> {
        self.y = y;
        self.k1 = (self.f)(self.t, &self.y)?;
        self.stats.evals += 1;
        Ok(())
    }

    fn initial_step(&mut self, t_limit: f64) -> Result<f64> {
        let hmax = (t_limit - self.t).abs().min(self.cfg.max_step);
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..N {
            let sk = self.cfg.atol + self.cfg.rtol * self.y[i].abs();
            dnf += (self.k1[i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h: f64 = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(hmax);

        let y1 = self.y + self.k1 * (h * self.direction);
        let f1 = (self.f)(self.t + h * self.direction, &y1)?;
        self.stats.evals += 1;
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = self.cfg.atol + self.cfg.rtol * self.y[i].abs();
            der2 += ((f1[i] - self.k1[i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (1e-6_f64).max(h * 1e-3)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        h = (100.0 * h).min(h1).min(hmax);
        Ok(h * self.direction)
    }

    /// Takes one accepted step, clamped so t never passes `t_limit`.
    /// Returns false when the limit has already been reached.
    pub fn advance(&mut self, t_limit: f64) -> Result<bool> {
        if (t_limit - self.t).abs() < 1e-14 * (1.0 + self.t.abs()) {
            return Ok(false);
        }
        self.direction = (t_limit - self.t).signum();
        if self.h == 0.0 || self.h.signum() != self.direction {
            self.h = self.initial_step(t_limit)?;
        }

        let mut consecutive_rejects = 0usize;
        loop {
            if self.stats.accepted + self.stats.rejected >= self.cfg.max_steps {
                return Err(RodError::MaxStepsExceeded { t: self.t });
            }
            // Clamp to the limit and to max_step.
            let mut h = self.h;
            if h.abs() > self.cfg.max_step {
                h = self.cfg.max_step * self.direction;
            }
            let remaining = t_limit - self.t;
            let mut exact_landing = false;
            if h.abs() >= remaining.abs() - 1e-14 * (1.0 + self.t.abs()) {
                h = remaining;
                exact_landing = true;
            }
            if h.abs() < f64::EPSILON * (1.0 + self.t.abs()) {
                return Err(RodError::StepSizeUnderflow { t: self.t });
            }

            match self.try_step(h)? {
                StepOutcome::Accepted { h_next } => {
                    if exact_landing {
                        self.t = t_limit;
                    }
                    self.h = h_next;
                    return Ok(true);
                }
                StepOutcome::Rejected { h_next } => {
                    self.h = h_next;
                    consecutive_rejects += 1;
                    if consecutive_rejects > 100 {
                        return Err(RodError::StepSizeUnderflow { t: self.t });
                    }
                }
            }
        }
    }

    /// Integrates to `t_end`, discarding intermediate output.
    pub fn integrate_to(&mut self, t_end: f64) -> Result<()> {
        while self.advance(t_end)? {}
        Ok(())
    }

    fn try_step(&mut self, h: f64) -> Result<StepOutcome> {
        let f = &mut self.f;
        let t = self.t;
        let y = &self.y;
        let k1 = &self.k1;

        let k2 = f(t + C2 * h, &(y + k1 * (A21 * h)))?;
        let k3 = f(t + C3 * h, &(y + k1 * (A31 * h) + k2 * (A32 * h)))?;
        let k4 = f(t + C4 * h, &(y + k1 * (A41 * h) + k3 * (A43 * h)))?;
        let k5 = f(t + C5 * h, &(y + k1 * (A51 * h) + k3 * (A53 * h) + k4 * (A54 * h)))?;
        let k6 = f(t + C6 * h, &(y + k1 * (A61 * h) + k4 * (A64 * h) + k5 * (A65 * h)))?;
        let k7 = f(t + C7 * h, &(y + k1 * (A71 * h) + k4 * (A74 * h) + k5 * (A75 * h) + k6 * (A76 * h)))?;
        let k8 = f(
            t + C8 * h,
            &(y + k1 * (A81 * h) + k4 * (A84 * h) + k5 * (A85 * h) + k6 * (A86 * h) + k7 * (A87 * h)),
        )?;
        let k9 = f(
            t + C9 * h,
            &(y + k1 * (A91 * h)
                + k4 * (A94 * h)
                + k5 * (A95 * h)
                + k6 * (A96 * h)
                + k7 * (A97 * h)
                + k8 * (A98 * h)),
        )?;
        let k10 = f(
            t + C10 * h,
            &(y + k1 * (A101 * h)
                + k4 * (A104 * h)
                + k5 * (A105 * h)
                + k6 * (A106 * h)
                + k7 * (A107 * h)
                + k8 * (A108 * h)
                + k9 * (A109 * h)),
        )?;
        let k11 = f(
            t + C11 * h,
            &(y + k1 * (A111 * h)
                + k4 * (A114 * h)
                + k5 * (A115 * h)
                + k6 * (A116 * h)
                + k7 * (A117 * h)
                + k8 * (A118 * h)
                + k9 * (A119 * h)
                + k10 * (A1110 * h)),
        )?;
        let t_new = t + h;
        let k12 = f(
            t_new,
            &(y + k1 * (A121 * h)
                + k4 * (A124 * h)
                + k5 * (A125 * h)
                + k6 * (A126 * h)
                + k7 * (A127 * h)
                + k8 * (A128 * h)
                + k9 * (A129 * h)
                + k10 * (A1210 * h)
                + k11 * (A1211 * h)),
        )?;
        self.stats.evals += 11;

        let ksum = k1 * B1 + k6 * B6 + k7 * B7 + k8 * B8 + k9 * B9 + k10 * B10 + k11 * B11 + k12 * B12;
        let y_new = y + ksum * h;

        // Embedded 5th/3rd order error estimate.
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..N {
            let sk = self.cfg.atol + self.cfg.rtol * self.y[i].abs().max(y_new[i].abs());
            let e3 = ksum[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            err3 += (e3 / sk) * (e3 / sk);
            let e5 = ER1 * k1[i]
                + ER6 * k6[i]
                + ER7 * k7[i]
                + ER8 * k8[i]
                + ER9 * k9[i]
                + ER10 * k10[i]
                + ER11 * k11[i]
                + ER12 * k12[i];
            err5 += (e5 / sk) * (e5 / sk);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let mut err = h.abs() * err5 * (1.0 / (deno * N as f64)).sqrt();
        if !err.is_finite() {
            err = 1e10;
        }

        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / SAFE).max(1.0 / FAC2).min(1.0 / FAC1);

        if err <= 1.0 {
            // Accepted.
            self.facold = err.max(1e-4);
            let k_new = f(t_new, &y_new)?;
            self.stats.evals += 1;
            self.stats.accepted += 1;

            if self.cfg.dense_output {
                let ydiff = y_new - y;
                self.cont[0] = *y;
                self.cont[1] = ydiff;
                let bspl = k1 * h - ydiff;
                self.cont[2] = bspl;
                self.cont[3] = ydiff - k_new * h - bspl;
                let mut c5 = k1 * D41
                    + k6 * D46
                    + k7 * D47
                    + k8 * D48
                    + k9 * D49
                    + k10 * D410
                    + k11 * D411
                    + k12 * D412;
                let mut c6 = k1 * D51
                    + k6 * D56
                    + k7 * D57
                    + k8 * D58
                    + k9 * D59
                    + k10 * D510
                    + k11 * D511
                    + k12 * D512;
                let mut c7 = k1 * D61
                    + k6 * D66
                    + k7 * D67
                    + k8 * D68
                    + k9 * D69
                    + k10 * D610
                    + k11 * D611
                    + k12 * D612;
                let mut c8 = k1 * D71
                    + k6 * D76
                    + k7 * D77
                    + k8 * D78
                    + k9 * D79
                    + k10 * D710
                    + k11 * D711
                    + k12 * D712;

                let k14 = f(
                    t + C14 * h,
                    &(y + (k1 * A141
                        + k7 * A147
                        + k8 * A148
                        + k9 * A149
                        + k10 * A1410
                        + k11 * A1411
                        + k12 * A1412
                        + k_new * A1413)
                        * h),
                )?;
                let k15 = f(
                    t + C15 * h,
                    &(y + (k1 * A151
                        + k6 * A156
                        + k7 * A157
                        + k8 * A158
                        + k11 * A1511
                        + k12 * A1512
                        + k_new * A1513
                        + k14 * A1514)
                        * h),
                )?;
                let k16 = f(
                    t + C16 * h,
                    &(y + (k1 * A161
                        + k6 * A166
                        + k7 * A167
                        + k8 * A168
                        + k9 * A169
                        + k_new * A1613
                        + k14 * A1614
                        + k15 * A1615)
                        * h),
                )?;
                self.stats.evals += 3;

                c5 = (c5 + k_new * D413 + k14 * D414 + k15 * D415 + k16 * D416) * h;
                c6 = (c6 + k_new * D513 + k14 * D514 + k15 * D515 + k16 * D516) * h;
                c7 = (c7 + k_new * D613 + k14 * D614 + k15 * D615 + k16 * D616) * h;
                c8 = (c8 + k_new * D713 + k14 * D714 + k15 * D715 + k16 * D716) * h;
                self.cont[4] = c5;
                self.cont[5] = c6;
                self.cont[6] = c7;
                self.cont[7] = c8;
                self.dense_ready = true;
            }

            self.t_old = t;
            self.y_old = self.y;
            self.h_old = h;
            self.t = t_new;
            self.y = y_new;
            self.k1 = k_new;

            Ok(StepOutcome::Accepted { h_next: h / fac })
        } else {
            self.stats.rejected += 1;
            let h_next = h / (fac11 / SAFE).min(1.0 / FAC1);
            Ok(StepOutcome::Rejected { h_next })
        }
    }

    /// Order-7 interpolation inside the last accepted step [t_old, t].
    pub fn interpolate(&self, ti: f64) -> SVector<f64, N> {
        assert!(self.dense_ready, "dense output not prepared");
        let s = (ti - self.t_old) / self.h_old;
        let s1 = 1.0 - s;
        let conpar = self.cont[4] + (self.cont[5] + (self.cont[6] + self.cont[7] * s) * s1) * s;
        self.cont[0] + (self.cont[1] + (self.cont[2] + (self.cont[3] + conpar * s1) * s) * s1) * s
    }
}

enum StepOutcome {
    Accepted { h_next: f64 },
    Rejected { h_next: f64 },
}

/// Fixed-step variant of the same tableau (order verification only).
pub fn step_fixed<F, const N: usize>(f: &mut F, t: f64, y: &SVector<f64, N>, h: f64) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + C2 * h, &(y + k1 * (A21 * h)))?;
    let k3 = f(t + C3 * h, &(y + k1 * (A31 * h) + k2 * (A32 * h)))?;
    let k4 = f(t + C4 * h, &(y + k1 * (A41 * h) + k3 * (A43 * h)))?;
    let k5 = f(t + C5 * h, &(y + k1 * (A51 * h) + k3 * (A53 * h) + k4 * (A54 * h)))?;
    let k6 = f(t + C6 * h, &(y + k1 * (A61 * h) + k4 * (A64 * h) + k5 * (A65 * h)))?;
    let k7 = f(t + C7 * h, &(y + k1 * (A71 * h) + k4 * (A74 * h) + k5 * (A75 * h) + k6 * (A76 * h)))?;
    let k8 = f(
        t + C8 * h,
        &(y + k1 * (A81 * h) + k4 * (A84 * h) + k5 * (A85 * h) + k6 * (A86 * h) + k7 * (A87 * h)),
    )?;
    let k9 = f(
        t + C9 * h,
        &(y + k1 * (A91 * h) + k4 * (A94 * h) + k5 * (A95 * h) + k6 * (A96 * h) + k7 * (A97 * h) + k8 * (A98 * h)),
    )?;
    let k10 = f(
        t + C10 * h,
        &(y + k1 * (A101 * h)
            + k4 * (A104 * h)
            + k5 * (A105 * h)
            + k6 * (A106 * h)
            + k7 * (A107 * h)
            + k8 * (A108 * h)
            + k9 * (A109 * h)),
    )?;
    let k11 = f(
        t + C11 * h,
        &(y + k1 * (A111 * h)
            + k4 * (A114 * h)
            + k5 * (A115 * h)
            + k6 * (A116 * h)
            + k7 * (A117 * h)
            + k8 * (A118 * h)
            + k9 * (A119 * h)
            + k10 * (A1110 * h)),
    )?;
    let k12 = f(
        t + h,
        &(y + k1 * (A121 * h)
            + k4 * (A124 * h)
            + k5 * (A125 * h)
            + k6 * (A126 * h)
            + k7 * (A127 * h)
            + k8 * (A128 * h)
            + k9 * (A129 * h)
            + k10 * (A1210 * h)
            + k11 * (A1211 * h)),
    )?;
    let ksum = k1 * B1 + k6 * B6 + k7 * B7 + k8 * B8 + k9 * B9 + k10 * B10 + k11 * B11 + k12 * B12;
    Ok(y + ksum * h)
}

/// Hybrid bisection/secant refinement of a root of `g` bracketed on [a, b];
/// `g` must have opposite signs at the ends. Converges on |g| <= tol_g or
/// interval below tol_t.
pub fn refine_root<G>(mut g: G, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64, tol_g: f64, tol_t: f64) -> Result<f64>
where
    G: FnMut(f64) -> f64,
{
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() {
        return Err(RodError::NoSignChange(format!("g({a}) = {ga}, g({b}) = {gb}")));
    }
    for _ in 0..200 {
        // Secant proposal, safeguarded to the bracket interior.
        let mut c = b - gb * (b - a) / (gb - ga);
        let lo = a.min(b);
        let hi = a.max(b);
        let margin = 0.1 * (hi - lo);
        if !(c > lo + margin && c < hi - margin) {
            c = 0.5 * (a + b);
        }
        let gc = g(c);
        if gc.abs() <= tol_g || (b - a).abs() <= tol_t {
            return Ok(c);
        }
        if gc.signum() == ga.signum() {
            a = c;
            ga = gc;
        } else {
            b = c;
            gb = gc;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SVector;

    type V2 = SVector<f64, 2>;

    fn harmonic(_t: f64, y: &V2) -> Result<V2> {
        Ok(V2::new(y[1], -y[0]))
    }

    #[test]
    fn harmonic_oscillator_energy_drift() {
        let cfg = IntegratorConfig { dense_output: false, ..Default::default() };
        let y0 = V2::new(1.0, 0.0);
        let mut stepper = Dop853::new(harmonic, 0.0, y0, &cfg).unwrap();
        stepper.integrate_to(1e4).unwrap();
        let y = stepper.y();
        let energy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((energy - 0.5).abs() < 1e-10, "drift = {:.3e}", (energy - 0.5).abs());
    }

    #[test]
    fn reaches_end_exactly() {
        let cfg = IntegratorConfig::default();
        let mut stepper = Dop853::new(harmonic, 0.0, V2::new(1.0, 0.0), &cfg).unwrap();
        stepper.integrate_to(12.345).unwrap();
        assert_eq!(stepper.t(), 12.345);
    }

    #[test]
    fn backward_integration_returns_to_start() {
        let cfg = IntegratorConfig::default();
        let y0 = V2::new(0.3, -0.8);
        let mut stepper = Dop853::new(harmonic, 0.0, y0, &cfg).unwrap();
        stepper.integrate_to(100.0).unwrap();
        let y_mid = *stepper.y();
        let mut back = Dop853::new(harmonic, 100.0, y_mid, &cfg).unwrap();
        back.integrate_to(0.0).unwrap();
        assert!((back.y() - y0).norm() < 1e-8, "return error {:.3e}", (back.y() - y0).norm());
    }

    #[test]
    fn dense_output_matches_analytic_solution() {
        let cfg = IntegratorConfig::default();
        let mut stepper = Dop853::new(harmonic, 0.0, V2::new(1.0, 0.0), &cfg).unwrap();
        while stepper.advance(10.0).unwrap() {
            let tm = 0.5 * (stepper.t_old() + stepper.t());
            let yi = stepper.interpolate(tm);
            assert!((yi[0] - tm.cos()).abs() < 1e-10);
            assert!((yi[1] + tm.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn fixed_step_order_is_eight() {
        // Nonlinear scalar problem with known solution: y' = y - t^2 + 1,
        // y(0) = 0.5, y(t) = (t+1)^2 - 0.5 e^t. Integrate to t = 4 with
        // steps large enough to stay above the rounding floor.
        let mut f = |t: f64, y: &SVector<f64, 1>| Ok(SVector::<f64, 1>::new(y[0] - t * t + 1.0));
        let exact = |t: f64| (t + 1.0) * (t + 1.0) - 0.5 * t.exp();
        let mut errors = Vec::new();
        let hs = [0.8f64, 0.4, 0.2];
        for &h in &hs {
            let mut y = SVector::<f64, 1>::new(0.5);
            let n = (4.0 / h).round() as usize;
            for i in 0..n {
                y = step_fixed(&mut f, i as f64 * h, &y, h).unwrap();
            }
            errors.push((y[0] - exact(4.0)).abs());
        }
        let slope1 = (errors[0] / errors[1]).log2();
        let slope2 = (errors[1] / errors[2]).log2();
        let slope = 0.5 * (slope1 + slope2);
        assert!((slope - 8.0).abs() < 0.3, "observed order {slope:.2}, errors {errors:?}");
    }

    #[test]
    fn field_error_propagates() {
        let f = |_t: f64, y: &SVector<f64, 1>| {
            if y[0] > 2.0 {
                Err(RodError::SingularTheta { sin_theta: 0.0 })
            } else {
                Ok(SVector::<f64, 1>::new(y[0]))
            }
        };
        let cfg = IntegratorConfig::default();
        let mut stepper = Dop853::new(f, 0.0, SVector::<f64, 1>::new(1.0), &cfg).unwrap();
        let err = stepper.integrate_to(5.0).unwrap_err();
        assert!(matches!(err, RodError::SingularTheta { .. }));
    }

    #[test]
    fn refine_root_finds_crossing() {
        let g = |t: f64| (t - 1.234).sin();
        let root = refine_root(g, 1.0, 1.5, g(1.0), g(1.5), 1e-14, 1e-15).unwrap();
        assert!((root - 1.234).abs() < 1e-12);
    }

    #[test]
    fn rejects_rtol_below_floor() {
        let cfg = IntegratorConfig { rtol: 1e-15, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
