import java.net.*;
import java.io.*;


class fileReaderServer{
    public static void main(String[] args){
        try{

            int serverPortNumber = Integer.parseInt(args[0]);

            ServerSocket connectionSocket = new ServerSocket(serverPortNumber);

            Socket clientSocket = connectionSocket.accept();

            BufferedReader brSocketInput = new BufferedReader(new InputStreamReader(clientSocket.getInputStream()));
            String filename = brSocketInput.readLine();

            brSocketInput.close();

            FileReader fr = new FileReader(filename);
            BufferedReader brFile = new BufferedReader(fr);
            PrintStream socketOutput = new PrintStream(clientSocket.getOutputStream());

            String line = null;

            while ( (line = brFile.readLine() ) != null){

                socketOutput.println(line);

            }

            brFile.close();
            fr.close();

            socketOutput.flush( );
            clientSocket.close( );
            connectionSocket.close( );
        }
        catch(IOException ie){
            ie.printStackTrace();
        }
    }
}
