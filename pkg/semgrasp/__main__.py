from semgrasp.cli import main

main()
