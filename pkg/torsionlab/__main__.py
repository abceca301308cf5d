from torsionlab.cli import main

main()
