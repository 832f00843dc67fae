from dataclasses import field
from dataclasses_json import config


# None のときは JSON に書き出さない
def exclude_none():
    return field(default=None, metadata=config(exclude=lambda x: x is None))
