"""Flat ``key = value`` text format shared by config and group files."""

_BOOLS = {"true": True, "false": False, "yes": True, "no": False}


def _scalar(tok):
    low = tok.lower()
    if low in _BOOLS:
        return _BOOLS[low]
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return None


def parse_value(raw):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    toks = raw.replace(",", " ").split()
    if not toks:
        return ""
    vals = [_scalar(t) for t in toks]
    if any(v is None for v in vals):
        return raw
    if len(vals) == 1 and "," not in raw:
        return vals[0]
    return tuple(vals)


def parse_kv(text, repeated=()):
    """Parse text into a dict. Keys listed in ``repeated`` collect a list."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        val = parse_value(raw)
        if key in repeated:
            out.setdefault(key, []).append(val)
        elif key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        else:
            out[key] = val
    return out


def format_value(val):
    if isinstance(val, (list, tuple)):
        return ", ".join(format_value(v) for v in val)
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    return str(val)


def dump_kv(d):
    return "".join(f"{k} = {format_value(v)}\n" for k, v in d.items())
