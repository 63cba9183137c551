"""Flat ``key=value`` config files."""


def read_key_values(path):
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            out[key.strip()] = value.strip()
    return out


def write_key_values(path, values):
    with open(path, "w") as fh:
        for k, v in values.items():
            fh.write(f"{k}={v}\n")
