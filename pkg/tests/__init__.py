# Tests package for kv-string-lab
