"""
Files of per-state rows preceded by two plain text lines: a magic line
naming the format and a ``key=value,...`` header.
"""
import io

import numpy as np
import pandas as pd

from banditlab import TableFormatError

# lines before the first data row
PREAMBLE_LINES = 2


def write_state_rows(path, magic, header, frame):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(magic + '\n')
        f.write(header + '\n')
        frame.to_csv(f, index=False, header=False)


def read_state_rows(path, magic, columns):
    """
    Return the header line and the rows as a DataFrame with ``columns``.
    Entries that are not numbers come back as NaN; :func:`check_state_rows`
    reports them with their line number.
    """
    with open(path, encoding='utf-8') as f:
        first = f.readline()
        if first.strip() != magic:
            raise TableFormatError('expected {!r}'.format(magic), 1)
        header = f.readline()
        if not header:
            raise TableFormatError('missing header', 2)
        body = f.read()

    if not body.strip():
        return header.strip(), pd.DataFrame({c: pd.Series(dtype=float) for c in columns})
    try:
        frame = pd.read_csv(io.StringIO(body), header=None, names=columns,
                            float_precision='round_trip', skip_blank_lines=True)
    except pd.errors.ParserError as e:
        raise TableFormatError('malformed rows ({})'.format(e))
    for column in columns:
        frame[column] = pd.to_numeric(frame[column], errors='coerce')
    return header.strip(), frame


def check_state_rows(frame, states, value_column):
    """
    Check that the rows list ``states`` in order with finite values and
    return the values as a numpy array.
    """
    alpha = np.array([arm.alpha for arm in states])
    beta = np.array([arm.beta for arm in states])
    n = min(len(frame), len(states))

    got_alpha = frame['alpha'].to_numpy(dtype=float)[:n]
    got_beta = frame['beta'].to_numpy(dtype=float)[:n]
    values = frame[value_column].to_numpy(dtype=float)
    bad = (got_alpha != alpha[:n]) | (got_beta != beta[:n]) | ~np.isfinite(values[:n])
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise TableFormatError('unexpected row {}'.format(
            ','.join(str(v) for v in frame.iloc[row].tolist())), row + PREAMBLE_LINES + 1)
    if len(frame) != len(states):
        raise TableFormatError('expected {} rows, found {}'.format(len(states), len(frame)),
                               len(frame) + PREAMBLE_LINES + 1)
    return values
