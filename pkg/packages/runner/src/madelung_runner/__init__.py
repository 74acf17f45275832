# Madelung Lab - Scenario Runner
