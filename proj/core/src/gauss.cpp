namespace jdcalc {}
