//! Config files: flat `key = value` option files (flags override them) and
//! the scene description consumed by `synth`.

use std::collections::HashMap;
use std::path::Path;

use tapv_core::bench::{SpriteConfig, SpriteShape, SyntheticSceneConfig};

use crate::CliError;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Parse a flat `key = value` file. Blank lines and `#` comments are
/// skipped; repeated keys other than `sprite` keep the last value.
pub fn parse_kv_file(path: &Path) -> Result<(HashMap<String, String>, Vec<String>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    let mut sprites = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            input_err(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key == "sprite" {
            sprites.push(value);
        } else {
            map.insert(key, value);
        }
    }
    Ok((map, sprites))
}

pub fn parse_value<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| input_err(format!("bad value for `{key}`: {raw}"))),
    }
}

pub fn parse_bool(map: &HashMap<String, String>, key: &str) -> Result<Option<bool>, CliError> {
    match map.get(key).map(String::as_str) {
        None => Ok(None),
        Some("true" | "1" | "yes" | "on") => Ok(Some(true)),
        Some("false" | "0" | "no" | "off") => Ok(Some(false)),
        Some(other) => Err(input_err(format!("bad boolean for `{key}`: {other}"))),
    }
}

/// Sprite spec: `<rect|disk> class=K size=S vel=VX,VY [at=X,Y] [enter=T]`.
fn parse_sprite(spec: &str) -> Result<SpriteConfig, CliError> {
    let mut tokens = spec.split_whitespace();
    let shape = match tokens.next() {
        Some("rect") | Some("rectangle") => SpriteShape::Rectangle,
        Some("disk") | Some("disc") => SpriteShape::Disk,
        other => {
            return Err(input_err(format!(
                "sprite shape must be rect or disk, got {other:?}"
            )))
        }
    };
    let mut class_id = None;
    let mut size = None;
    let mut velocity = None;
    let mut start = None;
    let mut entry_frame = None;
    for token in tokens {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| input_err(format!("bad sprite token `{token}`")))?;
        let pair = |value: &str| -> Result<(i32, i32), CliError> {
            let (a, b) = value
                .split_once(',')
                .ok_or_else(|| input_err(format!("expected `a,b` in `{token}`")))?;
            Ok((
                a.trim()
                    .parse()
                    .map_err(|_| input_err(format!("bad number in `{token}`")))?,
                b.trim()
                    .parse()
                    .map_err(|_| input_err(format!("bad number in `{token}`")))?,
            ))
        };
        match key {
            "class" => {
                class_id = Some(
                    value
                        .parse()
                        .map_err(|_| input_err(format!("bad sprite class `{value}`")))?,
                )
            }
            "size" => {
                size = Some(
                    value
                        .parse()
                        .map_err(|_| input_err(format!("bad sprite size `{value}`")))?,
                )
            }
            "vel" => velocity = Some(pair(value)?),
            "at" => start = Some(pair(value)?),
            "enter" => {
                entry_frame = Some(
                    value
                        .parse()
                        .map_err(|_| input_err(format!("bad sprite entry frame `{value}`")))?,
                )
            }
            other => return Err(input_err(format!("unknown sprite key `{other}`"))),
        }
    }
    Ok(SpriteConfig {
        shape,
        class_id: class_id.ok_or_else(|| input_err("sprite needs class=K"))?,
        size: size.ok_or_else(|| input_err("sprite needs size=S"))?,
        velocity: velocity.ok_or_else(|| input_err("sprite needs vel=VX,VY"))?,
        start,
        entry_frame,
    })
}

/// Scene file: `width`, `height`, `frames`, `classes`, `background`, `seed`
/// keys plus one `sprite = ...` line per sprite.
pub fn load_scene(path: &Path) -> Result<SyntheticSceneConfig, CliError> {
    let (map, sprite_specs) = parse_kv_file(path)?;
    let require = |key: &str| -> Result<usize, CliError> {
        parse_value(&map, key)?.ok_or_else(|| input_err(format!("scene file needs `{key}`")))
    };
    let sprites = sprite_specs
        .iter()
        .map(|spec| parse_sprite(spec))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SyntheticSceneConfig {
        width: require("width")?,
        height: require("height")?,
        frame_count: require("frames")?,
        num_classes: require("classes")?,
        background_class: parse_value(&map, "background")?.unwrap_or(0),
        sprites,
        seed: parse_value(&map, "seed")?.unwrap_or(0),
    })
}

/// Palette file for the color-rule backend: one `<class> <r> <g> <b>` line
/// per entry.
pub fn load_palette(path: &Path) -> Result<Vec<([u8; 3], u8)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let mut palette = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(input_err(format!(
                "{}:{}: expected `<class> <r> <g> <b>`",
                path.display(),
                lineno + 1
            )));
        }
        let num = |s: &str| -> Result<u8, CliError> {
            s.parse().map_err(|_| {
                input_err(format!(
                    "{}:{}: bad number `{s}`",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        palette.push((
            [num(fields[1])?, num(fields[2])?, num(fields[3])?],
            num(fields[0])?,
        ));
    }
    if palette.is_empty() {
        return Err(input_err(format!("{}: empty palette", path.display())));
    }
    Ok(palette)
}
