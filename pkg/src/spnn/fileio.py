"""Small file helpers shared by the model store, experiments and CLI."""

import hashlib
import os
import tempfile

__all__ = ["atomic_write_text", "git_blob_sha1"]


def atomic_write_text(path, text):
    """Write text to path via a temp file and rename, so failures never
    leave a partial output behind."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def git_blob_sha1(data):
    """Content hash of a byte string, identical to `git hash-object`."""
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()
