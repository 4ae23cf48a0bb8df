use crate::config::KeyValues;
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Background {
    Uniform { level: f64 },
    /// Linear in x from `lo` at the left edge to `hi` at the right edge.
    Gradient { lo: f64, hi: f64 },
    /// Hexagonal lattice of disks at `level` on a `base` background.
    Pillars {
        spacing: f64,
        radius: f64,
        level: f64,
        base: f64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WormSpec {
    /// Arc length in pixels.
    pub length: f64,
    pub width: f64,
    pub amplitude: f64,
    /// Wavelength along x in pixels.
    pub wavelength: f64,
    pub frequency: f64,
    /// Forward speed of the head along +x, pixels per second.
    pub speed: f64,
    pub intensity_mean: f64,
    pub intensity_sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub frame_rate: f64,
    pub seed: u64,
    pub noise_sigma: f64,
    pub background: Background,
    pub worm: WormSpec,
    /// Head x at t = 0; `None` centres the swept region horizontally.
    pub head_x: Option<f64>,
    /// Centerline y offset; `None` is the image's vertical centre.
    pub center_y: Option<f64>,
}

pub const PRESETS: [&str; 3] = ["uniform", "gradient", "pillars"];

impl Default for WormSpec {
    fn default() -> Self {
        Self {
            length: 300.0,
            width: 12.0,
            amplitude: 20.0,
            wavelength: 240.0,
            frequency: 1.5,
            speed: 20.0,
            intensity_mean: 60.0,
            intensity_sigma: 5.0,
        }
    }
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self::preset("uniform").expect("built-in preset")
    }
}

impl SceneSpec {
    /// The three benchmark scenes: 640 x 480, 60 frames at 30 fps, noise 8.
    pub fn preset(name: &str) -> Result<Self> {
        let base = SceneSpec {
            width: 640,
            height: 480,
            n_frames: 60,
            frame_rate: 30.0,
            seed: 1,
            noise_sigma: 8.0,
            background: Background::Uniform { level: 200.0 },
            worm: WormSpec::default(),
            head_x: None,
            center_y: None,
        };
        Ok(match name {
            "uniform" => base,
            "gradient" => SceneSpec {
                background: Background::Gradient { lo: 110.0, hi: 230.0 },
                ..base
            },
            // pillars share the worm's mean intensity; only the worm's texture
            // tells them apart
            "pillars" => SceneSpec {
                background: Background::Pillars {
                    spacing: 40.0,
                    radius: 12.0,
                    level: 60.0,
                    base: 200.0,
                },
                worm: WormSpec {
                    intensity_sigma: 15.0,
                    ..WormSpec::default()
                },
                ..base
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown scene preset {other:?} (expected one of {PRESETS:?})"
                )))
            }
        })
    }

    /// Reads a scene from key/value pairs. `preset` (default `uniform`) supplies
    /// every key that is not given.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut s = Self::preset(kv.get("preset").unwrap_or("uniform"))?;
        s.width = kv.parse_or("width", s.width)?;
        s.height = kv.parse_or("height", s.height)?;
        s.n_frames = kv.parse_or("n_frames", s.n_frames)?;
        s.frame_rate = kv.parse_or("frame_rate", s.frame_rate)?;
        s.seed = kv.parse_or("seed", s.seed)?;
        s.noise_sigma = kv.parse_or("noise_sigma", s.noise_sigma)?;
        let w = &mut s.worm;
        w.length = kv.parse_or("worm_length", w.length)?;
        w.width = kv.parse_or("worm_width", w.width)?;
        w.amplitude = kv.parse_or("amplitude", w.amplitude)?;
        w.wavelength = kv.parse_or("wavelength", w.wavelength)?;
        w.frequency = kv.parse_or("frequency", w.frequency)?;
        w.speed = kv.parse_or("speed", w.speed)?;
        w.intensity_mean = kv.parse_or("worm_mean", w.intensity_mean)?;
        w.intensity_sigma = kv.parse_or("worm_sigma", w.intensity_sigma)?;
        s.head_x = kv.parse_opt("head_x")?.or(s.head_x);
        s.center_y = kv.parse_opt("center_y")?.or(s.center_y);

        let (level, lo, hi, spacing, radius, pillar, base) = match s.background {
            Background::Uniform { level } => (level, 110.0, 230.0, 40.0, 12.0, 60.0, level),
            Background::Gradient { lo, hi } => (200.0, lo, hi, 40.0, 12.0, 60.0, 200.0),
            Background::Pillars {
                spacing,
                radius,
                level,
                base,
            } => (base, 110.0, 230.0, spacing, radius, level, base),
        };
        let level = kv.parse_or("background_level", level)?;
        let kind = kv.get("background").map(str::to_string);
        let kind = kind.as_deref().unwrap_or(match s.background {
            Background::Uniform { .. } => "uniform",
            Background::Gradient { .. } => "gradient",
            Background::Pillars { .. } => "pillars",
        });
        s.background = match kind {
            "uniform" => Background::Uniform { level },
            "gradient" => Background::Gradient {
                lo: kv.parse_or("gradient_lo", lo)?,
                hi: kv.parse_or("gradient_hi", hi)?,
            },
            "pillars" => Background::Pillars {
                spacing: kv.parse_or("pillar_spacing", spacing)?,
                radius: kv.parse_or("pillar_radius", radius)?,
                level: kv.parse_or("pillar_level", pillar)?,
                base: if kv.contains("background_level") { level } else { base },
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown background {other:?} (expected uniform, gradient or pillars)"
                )))
            }
        };
        s.validate()?;
        Ok(s)
    }

    /// The complete scene as key/value pairs, readable by [`Self::from_key_values`].
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        let w = &self.worm;
        for (k, v) in [
            ("width", self.width.to_string()),
            ("height", self.height.to_string()),
            ("n_frames", self.n_frames.to_string()),
            ("frame_rate", self.frame_rate.to_string()),
            ("seed", self.seed.to_string()),
            ("noise_sigma", self.noise_sigma.to_string()),
            ("worm_length", w.length.to_string()),
            ("worm_width", w.width.to_string()),
            ("amplitude", w.amplitude.to_string()),
            ("wavelength", w.wavelength.to_string()),
            ("frequency", w.frequency.to_string()),
            ("speed", w.speed.to_string()),
            ("worm_mean", w.intensity_mean.to_string()),
            ("worm_sigma", w.intensity_sigma.to_string()),
            ("head_x", self.head_x().to_string()),
            ("center_y", self.center_y().to_string()),
        ] {
            kv.set(k, v);
        }
        match self.background {
            Background::Uniform { level } => {
                kv.set("background", "uniform");
                kv.set("background_level", level.to_string());
            }
            Background::Gradient { lo, hi } => {
                kv.set("background", "gradient");
                kv.set("gradient_lo", lo.to_string());
                kv.set("gradient_hi", hi.to_string());
            }
            Background::Pillars {
                spacing,
                radius,
                level,
                base,
            } => {
                kv.set("background", "pillars");
                kv.set("background_level", base.to_string());
                kv.set("pillar_spacing", spacing.to_string());
                kv.set("pillar_radius", radius.to_string());
                kv.set("pillar_level", level.to_string());
            }
        }
        kv
    }

    pub fn duration(&self) -> f64 {
        self.n_frames.saturating_sub(1) as f64 / self.frame_rate
    }

    /// Approximate x extent of the body (exact for whole wavelengths).
    pub fn body_extent(&self) -> f64 {
        self.worm.length * self.worm.wavelength / super::wavelength_arc(&self.worm)
    }

    pub fn head_x(&self) -> f64 {
        self.head_x.unwrap_or_else(|| {
            let travel = self.worm.speed * self.duration();
            (self.width as f64 - 1.0) / 2.0 + (self.body_extent() - travel) / 2.0
        })
    }

    pub fn center_y(&self) -> f64 {
        self.center_y.unwrap_or((self.height as f64 - 1.0) / 2.0)
    }

    /// Checks parameter ranges and that the worm keeps a margin of `A + W`
    /// from every image edge in every frame.
    pub fn validate(&self) -> Result<()> {
        let w = &self.worm;
        let positive = [
            ("frame_rate", self.frame_rate),
            ("worm_length", w.length),
            ("worm_width", w.width),
            ("wavelength", w.wavelength),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("noise_sigma", self.noise_sigma),
            ("worm_sigma", w.intensity_sigma),
            ("amplitude", w.amplitude),
            ("frequency", w.frequency),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !w.speed.is_finite() {
            return Err(Error::InvalidArgument("speed must be finite".into()));
        }
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return Err(Error::InvalidArgument("width, height and n_frames must be positive".into()));
        }
        if let Background::Pillars { spacing, radius, .. } = self.background {
            if !(spacing > 0.0 && radius >= 0.0) {
                return Err(Error::InvalidArgument("pillar spacing must be positive".into()));
            }
        }
        let margin = w.amplitude + w.width;
        let head0 = self.head_x();
        let head1 = head0 + w.speed * self.duration();
        let x_lo = head0.min(head1) - w.length;
        let x_hi = head0.max(head1);
        let y = self.center_y();
        let (wf, hf) = (self.width as f64 - 1.0, self.height as f64 - 1.0);
        if x_lo < margin - w.amplitude || x_hi > wf - margin + w.amplitude {
            return Err(Error::SceneBounds(format!(
                "body x range [{x_lo:.1}, {x_hi:.1}] leaves the {}-pixel-wide frame",
                self.width
            )));
        }
        if y - margin < 0.0 || y + margin > hf {
            return Err(Error::SceneBounds(format!(
                "body y range {y:.1} +- {margin:.1} leaves the {}-pixel-high frame",
                self.height
            )));
        }
        Ok(())
    }
}
