# Tests for closedsets
